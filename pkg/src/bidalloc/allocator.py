"""Grant the single resource to the predicted winner and summarise the grants."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from decimal import ROUND_HALF_EVEN, Decimal
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .classifier import Theta, as_window, predict
from .errors import ContractError

PLAYER_C = 1
PLAYER_D = 0


@dataclass(frozen=True)
class AllocationDecision:
    request_index: int
    predicted_winner: int
    actual_winner: int | None = None

    def __post_init__(self):
        if self.predicted_winner not in (0, 1):
            raise ContractError("predicted_winner must be 0 or 1")
        if self.actual_winner not in (None, 0, 1):
            raise ContractError("actual_winner must be 0, 1 or None")

    @property
    def granted_to(self) -> str:
        return "C" if self.predicted_winner == PLAYER_C else "D"


@dataclass(frozen=True)
class UtilizationReport:
    """Resource shares in percent, rounded to two decimals.

    ``share_d`` is ``100 - share_c`` after rounding so the pair always sums
    to exactly 100.00. Raw counts are kept as the source of truth.
    """

    share_c: float
    share_d: float
    overall: float
    n_requests: int
    count_c: int
    count_d: int
    actual_count_c: int | None = None

    @property
    def exact_share_c(self) -> Fraction:
        return Fraction(100 * self.count_c, self.n_requests)

    @property
    def exact_share_d(self) -> Fraction:
        return Fraction(100 * self.count_d, self.n_requests)

    def to_dict(self) -> dict:
        return {
            "share_c": self.share_c,
            "share_d": self.share_d,
            "overall": self.overall,
            "n_requests": self.n_requests,
            "count_c": self.count_c,
            "count_d": self.count_d,
            "actual_count_c": self.actual_count_c,
        }

    @classmethod
    def from_dict(cls, d: dict) -> UtilizationReport:
        return cls(**d)


@dataclass(frozen=True)
class AccuracyReport:
    correct: int
    total: int
    accuracy: float

    @property
    def exact(self) -> Fraction:
        return Fraction(100 * self.correct, self.total)

    def to_dict(self) -> dict:
        return {"correct": self.correct, "total": self.total, "accuracy": self.accuracy}

    @classmethod
    def from_dict(cls, d: dict) -> AccuracyReport:
        return cls(**d)


def resolve_bid(theta: Theta, window, request_index: int = 0) -> AllocationDecision:
    """Grant the resource to whichever player the classifier predicts."""
    return AllocationDecision(request_index, predict(theta, window))


def advance_window(window, outcome: int) -> np.ndarray:
    """Drop the oldest slot and append ``outcome`` as the newest."""
    w = as_window(window)
    if outcome not in (0, 1):
        raise ContractError("outcome must be 0 or 1")
    out = np.empty_like(w)
    out[:-1] = w[1:]
    out[-1] = outcome
    return out


def run_closed_loop(theta: Theta, start_window, outcomes: Sequence[int],
                    start_index: int = 0) -> list[AllocationDecision]:
    """Allocate one bid per actual outcome, advancing the window on the truth.

    The window always holds the real history; predictions never feed back.
    """
    window = as_window(start_window, theta.n)
    decisions = []
    for i, actual in enumerate(outcomes):
        actual = int(actual)
        d = resolve_bid(theta, window, start_index + i)
        decisions.append(AllocationDecision(d.request_index, d.predicted_winner, actual))
        window = advance_window(window, actual)
    return decisions


def _round2(q: Fraction) -> Decimal:
    return (Decimal(q.numerator) / Decimal(q.denominator)).quantize(
        Decimal("0.01"), rounding=ROUND_HALF_EVEN
    )


def utilization(decisions: Iterable[AllocationDecision]) -> UtilizationReport:
    """Percentage of grants that went to each player."""
    decisions = list(decisions)
    if not decisions:
        raise ContractError("utilization needs at least one decision")
    n = len(decisions)
    count_c = sum(1 for d in decisions if d.predicted_winner == PLAYER_C)
    count_d = n - count_c
    actual_c = None
    if all(d.actual_winner is not None for d in decisions):
        actual_c = sum(1 for d in decisions if d.actual_winner == PLAYER_C)
    share_c = _round2(Fraction(100 * count_c, n))
    share_d = Decimal("100.00") - share_c
    return UtilizationReport(
        share_c=float(share_c),
        share_d=float(share_d),
        overall=100.0,
        n_requests=n,
        count_c=count_c,
        count_d=count_d,
        actual_count_c=actual_c,
    )


def accuracy(decisions: Iterable[AllocationDecision]) -> AccuracyReport:
    """Percentage of predictions that matched the actual winner."""
    decisions = list(decisions)
    if not decisions:
        raise ContractError("accuracy needs at least one decision")
    if any(d.actual_winner is None for d in decisions):
        raise ContractError("every decision needs an actual winner to score accuracy")
    correct = sum(1 for d in decisions if d.predicted_winner == d.actual_winner)
    total = len(decisions)
    return AccuracyReport(correct, total, 100.0 * correct / total)


def write_decisions_csv(decisions: Iterable[AllocationDecision], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["request_index", "predicted_winner", "actual_winner"])
        for d in decisions:
            actual = "" if d.actual_winner is None else d.actual_winner
            w.writerow([d.request_index, d.predicted_winner, actual])


def read_decisions_csv(path) -> list[AllocationDecision]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["request_index", "predicted_winner", "actual_winner"]:
            raise ContractError(f"unexpected decisions header {reader.fieldnames!r}")
        return [
            AllocationDecision(
                int(row["request_index"]),
                int(row["predicted_winner"]),
                None if row["actual_winner"] == "" else int(row["actual_winner"]),
            )
            for row in reader
        ]


def write_utilization_csv(report: UtilizationReport, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n_requests", "share_C_pct", "share_D_pct", "overall_pct",
                    "count_C", "count_D", "actual_count_C"])
        actual = "" if report.actual_count_c is None else report.actual_count_c
        w.writerow([report.n_requests, f"{report.share_c:.2f}", f"{report.share_d:.2f}",
                    f"{report.overall:.2f}", report.count_c, report.count_d, actual])
