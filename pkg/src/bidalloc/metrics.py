"""Per-request decision delay and the Markov tail bound on it.

For a nonnegative delay D and a threshold ``d_max > 0``,

    P(D >= d_max) <= E[D] / d_max.

Here both sides are evaluated on an empirical sample: the left as the
fraction of samples at or above ``d_max``, the right from the sample mean.
On the empirical distribution the inequality holds exactly, and
``verify_bound`` checks it in exact rational arithmetic.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .classifier import Theta, as_window, predict, predict_batch
from .errors import ContractError


@dataclass(frozen=True, eq=False)
class DelayStats:
    """Delay samples in microseconds with their total and mean."""

    samples: np.ndarray
    total: float
    mean: float
    n_requests: int

    @classmethod
    def from_samples(cls, samples: Iterable[float]) -> DelayStats:
        arr = np.asarray(list(samples) if not isinstance(samples, np.ndarray) else samples,
                         dtype=np.float64).reshape(-1)
        if arr.size == 0:
            raise ContractError("delay statistics need at least one sample")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise ContractError("delay samples must be finite and nonnegative")
        total = math.fsum(arr.tolist())
        return cls(arr, total, total / arr.size, int(arr.size))

    def to_dict(self, include_samples: bool = False) -> dict:
        d = {"total_us": self.total, "mean_us": self.mean, "n_requests": self.n_requests}
        if include_samples:
            d["samples_us"] = self.samples.tolist()
        return d


@dataclass(frozen=True)
class MarkovBound:
    d_max_us: float
    mean_us: float
    bound: float
    empirical_tail: float | None = None
    holds: bool | None = None

    @property
    def bound_clipped(self) -> float:
        return min(1.0, self.bound)

    def to_dict(self) -> dict:
        return {
            "d_max_us": self.d_max_us,
            "mean_us": self.mean_us,
            "bound": self.bound,
            "bound_clipped": self.bound_clipped,
            "empirical_tail": self.empirical_tail,
            "holds": self.holds,
        }

    @classmethod
    def from_dict(cls, d: dict) -> MarkovBound:
        return cls(d["d_max_us"], d["mean_us"], d["bound"], d.get("empirical_tail"),
                   d.get("holds"))


def _check_dmax(d_max: float) -> None:
    if not (math.isfinite(d_max) and d_max > 0):
        raise ContractError(f"d_max must be finite and > 0, got {d_max!r}")


def time_predictions(theta: Theta, windows: Sequence) -> DelayStats:
    """Wall-clock each ``predict`` call with the monotonic performance counter.

    The counter's own call overhead (tens of nanoseconds) is included in
    every sample and is not subtracted.
    """
    windows = [as_window(w, theta.n) for w in windows]
    if not windows:
        raise ContractError("need at least one window to time")
    clock = time.perf_counter_ns
    durations = []
    for w in windows:
        t0 = clock()
        predict(theta, w)
        durations.append((clock() - t0) / 1000.0)
    return DelayStats.from_samples(durations)


def markov_bound(mean: float, d_max: float) -> MarkovBound:
    """The right-hand side ``mean / d_max``, not clipped to 1."""
    _check_dmax(d_max)
    if not (math.isfinite(mean) and mean >= 0):
        raise ContractError("mean delay must be finite and >= 0")
    return MarkovBound(d_max_us=float(d_max), mean_us=float(mean), bound=mean / d_max)


def empirical_tail(stats: DelayStats, d_max: float) -> float:
    """Fraction of samples with delay >= d_max."""
    _check_dmax(d_max)
    return int(np.count_nonzero(stats.samples >= d_max)) / stats.n_requests


def bound_holds_exactly(stats: DelayStats, d_max: float) -> bool:
    """``count(D >= d_max) * d_max <= sum(D)`` in exact rational arithmetic."""
    _check_dmax(d_max)
    tail_count = int(np.count_nonzero(stats.samples >= d_max))
    if tail_count == 0:
        return True
    total = sum(map(Fraction, stats.samples.tolist()), Fraction(0))
    return tail_count * Fraction(d_max) <= total


def verify_bound(stats: DelayStats, d_max: float) -> tuple[bool, MarkovBound]:
    """Check empirical_tail <= min(1, mean/d_max) and return the full report."""
    rep = markov_bound(stats.mean, d_max)
    tail = empirical_tail(stats, d_max)
    # tail <= 1 always, so tail <= min(1, bound) reduces to tail <= bound.
    holds = bound_holds_exactly(stats, d_max)
    return holds, MarkovBound(rep.d_max_us, rep.mean_us, rep.bound, tail, holds)


@dataclass(frozen=True)
class BenchRow:
    n_requests: int
    total_us: float
    avg_per_request_us: float
    noise_us: float


def bench_sweep(theta: Theta, X: np.ndarray, sweep: Sequence[int],
                repeats: int = 15) -> list[BenchRow]:
    """Time batch prediction of the first ``k`` rows of ``X`` for each ``k`` in ``sweep``.

    Repeats are interleaved round-robin across the sweep so that slow drift
    in machine load hits every row alike. Each row reports the median over
    ``repeats`` runs as its total and the interquartile range as ``noise_us``.
    """
    sweep = [int(k) for k in sweep]
    if not sweep or min(sweep) < 1:
        raise ContractError("sweep needs one or more counts >= 1")
    if max(sweep) > X.shape[0]:
        raise ContractError(f"sweep asks for {max(sweep)} requests but only {X.shape[0]} windows given")
    if repeats < 1:
        raise ContractError("repeats must be >= 1")
    blocks = [np.ascontiguousarray(X[:k], dtype=np.float64) for k in sweep]
    clock = time.perf_counter_ns
    for block in blocks:
        predict_batch(theta, block)
    runs = [[] for _ in blocks]
    for _ in range(repeats):
        for block, acc in zip(blocks, runs):
            t0 = clock()
            predict_batch(theta, block)
            acc.append((clock() - t0) / 1000.0)
    rows = []
    for k, acc in zip(sweep, runs):
        q1, med, q3 = np.percentile(acc, [25, 50, 75])
        rows.append(BenchRow(k, float(med), float(med) / k, float(q3 - q1)))
    return rows


def bench_batch(theta: Theta, X: np.ndarray, repeats: int = 15) -> BenchRow:
    """Time batch prediction of all rows of ``X``; see ``bench_sweep``."""
    if X.shape[0] < 1:
        raise ContractError("need at least one request to benchmark")
    return bench_sweep(theta, X, [X.shape[0]], repeats)[0]


def write_delay_csv(rows: Iterable[BenchRow | DelayStats], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n_requests", "total_us", "avg_per_request_us"])
        for r in rows:
            if isinstance(r, DelayStats):
                n, total, avg = r.n_requests, r.total, r.mean
            else:
                n, total, avg = r.n_requests, r.total_us, r.avg_per_request_us
            w.writerow([n, f"{total:.2f}", f"{avg:.4f}"])
