"""Synthetic encounter histories between players C and D.

Three ground-truth processes are available:

* ``IID``: every encounter is won by C with a fixed probability.
* ``LogisticTruth``: C wins with probability ``sigmoid(theta* . window)``
  where the window is the previous ``n`` outcomes. This is the case where the
  classifier's model is exactly right, so the Bayes oracle is computable.
* ``MarkovPersistence``: the win probability depends only on the previous
  outcome.

Outcomes are encoded 1 = C won, 0 = D won. Windows are ordered oldest first.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Union

import numpy as np

from .classifier import Theta, TrainingSet, as_window, predict, sigmoid
from .errors import ContractError

# Above this window length the 2^n lookup table is not worth building.
_MAX_TABLE_BITS = 20


@dataclass(frozen=True)
class IID:
    p: float

    def __post_init__(self):
        _check_prob("p", self.p)


@dataclass(frozen=True, eq=False)
class LogisticTruth:
    theta_star: Theta

    def __eq__(self, other):
        return isinstance(other, LogisticTruth) and self.theta_star == other.theta_star


@dataclass(frozen=True)
class MarkovPersistence:
    p_repeat_after_c_win: float
    p_c_win_after_d_win: float

    def __post_init__(self):
        _check_prob("p_repeat_after_c_win", self.p_repeat_after_c_win)
        _check_prob("p_c_win_after_d_win", self.p_c_win_after_d_win)

    @property
    def stationary_c(self) -> float:
        """Long-run fraction of C wins (0.5 when the chain is reducible)."""
        a, b = self.p_repeat_after_c_win, self.p_c_win_after_d_win
        denom = b + (1.0 - a)
        return 0.5 if denom == 0 else b / denom


Variant = Union[IID, LogisticTruth, MarkovPersistence]


@dataclass(frozen=True)
class GeneratorSpec:
    variant: Variant
    seed: int = 0

    def __post_init__(self):
        if not (0 <= int(self.seed) < 2**64):
            raise ContractError("seed must be a 64-bit unsigned integer")

    def to_dict(self) -> dict:
        v = self.variant
        if isinstance(v, IID):
            d = {"variant": "iid", "p": v.p}
        elif isinstance(v, LogisticTruth):
            d = {"variant": "logistic", "theta_star": v.theta_star.to_dict()}
        else:
            d = {
                "variant": "markov",
                "p_repeat_after_c_win": v.p_repeat_after_c_win,
                "p_c_win_after_d_win": v.p_c_win_after_d_win,
            }
        d["seed"] = int(self.seed)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> GeneratorSpec:
        kind = d.get("variant")
        if kind == "iid":
            variant = IID(float(d["p"]))
        elif kind == "logistic":
            variant = LogisticTruth(Theta.from_dict(d["theta_star"]))
        elif kind == "markov":
            variant = MarkovPersistence(float(d["p_repeat_after_c_win"]),
                                        float(d["p_c_win_after_d_win"]))
        else:
            raise ContractError(f"unknown generator variant {kind!r}")
        return cls(variant, int(d.get("seed", 0)))


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ContractError("train_fraction must lie in (0, 1)")


def _check_prob(name, p):
    if not (isinstance(p, (int, float)) and 0.0 <= p <= 1.0):
        raise ContractError(f"{name} must be a probability in [0, 1], got {p!r}")


def calibrated_theta() -> Theta:
    """The shipped ground truth produced by ``scripts/calibrate_generator.py``."""
    text = resources.files("bidalloc.data").joinpath("calibrated_theta.json").read_text()
    return Theta.from_json(text)


def default_generator(seed: int = 0) -> GeneratorSpec:
    return GeneratorSpec(LogisticTruth(calibrated_theta()), seed)


def warmup(n: int) -> np.ndarray:
    """Alternating 1, 0, 1, 0, ... used as the first ``n`` logistic outcomes."""
    return (1 - np.arange(n) % 2).astype(np.uint8)


def _window_table(theta: Theta) -> np.ndarray:
    # Entry k is P(C wins | window) where bit (n-1-j) of k is slot j.
    n = theta.n
    idx = np.arange(1 << n)
    bits = (idx[:, None] >> (n - 1 - np.arange(n))) & 1
    return sigmoid(theta.bias + bits @ theta.weights)


def generate(spec: GeneratorSpec, length: int) -> np.ndarray:
    """Draw an outcome history of the given length; reproducible from ``spec.seed``."""
    if length < 1:
        raise ContractError("length must be >= 1")
    rng = np.random.default_rng(spec.seed)
    u = rng.random(length)
    v = spec.variant

    if isinstance(v, IID):
        return (u < v.p).astype(np.uint8)

    out = np.empty(length, dtype=np.uint8)
    if isinstance(v, MarkovPersistence):
        a, b = v.p_repeat_after_c_win, v.p_c_win_after_d_win
        prev = 1 if u[0] < v.stationary_c else 0
        out[0] = prev
        ul = u.tolist()
        for t in range(1, length):
            prev = 1 if ul[t] < (a if prev else b) else 0
            out[t] = prev
        return out

    theta = v.theta_star
    n = theta.n
    k = min(n, length)
    out[:k] = warmup(n)[:k]
    if length <= n:
        return out
    ul = u.tolist()
    if n <= _MAX_TABLE_BITS:
        table = _window_table(theta).tolist()
        mask = (1 << n) - 1
        state = 0
        for bit in out[:n].tolist():
            state = (state << 1) | bit
        for t in range(n, length):
            o = 1 if ul[t] < table[state] else 0
            out[t] = o
            state = ((state << 1) | o) & mask
    else:
        w = theta.weights
        for t in range(n, length):
            p = sigmoid(theta.bias + float(w @ out[t - n:t]))
            out[t] = 1 if ul[t] < p else 0
    return out


def featurize(history, window: int) -> TrainingSet:
    """Slide a length-``window`` frame over the history.

    Sample t has features ``history[t:t+window]`` and label ``history[t+window]``.
    """
    h = np.asarray(history)
    if window < 1:
        raise ContractError("window must be >= 1")
    if h.ndim != 1 or h.size < window + 1:
        raise ContractError(f"history of length {h.size} is too short for window {window}")
    if not np.all((h == 0) | (h == 1)):
        raise ContractError("history outcomes must be 0 or 1")
    X = np.lib.stride_tricks.sliding_window_view(h[:-1], window)
    return TrainingSet(np.ascontiguousarray(X), h[window:])


def split(data: TrainingSet, spec: SplitSpec) -> tuple[TrainingSet, TrainingSet]:
    """Chronological split: the first ``round(fraction * m)`` samples train."""
    k = round(spec.train_fraction * data.m)
    if k < 1 or k >= data.m:
        raise ContractError(
            f"split of {data.m} samples at {spec.train_fraction} leaves an empty side"
        )
    return (TrainingSet(data.features[:k], data.labels[:k]),
            TrainingSet(data.features[k:], data.labels[k:]))


def true_probability(spec: GeneratorSpec, x) -> float:
    """P(next outcome = 1 | window x) under the generator."""
    x = as_window(x)
    v = spec.variant
    if isinstance(v, IID):
        return v.p
    if isinstance(v, MarkovPersistence):
        return v.p_repeat_after_c_win if x[-1] == 1 else v.p_c_win_after_d_win
    n = v.theta_star.n
    if x.size < n:
        raise ContractError(f"window of {x.size} is shorter than the generator's memory {n}")
    return sigmoid(v.theta_star.bias + float(v.theta_star.weights @ x[-n:]))


def bayes_predict(spec: GeneratorSpec, x) -> int:
    """Label chosen by the oracle that knows the generator's win probability."""
    v = spec.variant
    if isinstance(v, LogisticTruth):
        x = as_window(x)
        n = v.theta_star.n
        if x.size < n:
            raise ContractError(f"window of {x.size} is shorter than the generator's memory {n}")
        return predict(v.theta_star, x[-n:])
    return 1 if true_probability(spec, x) >= 0.5 else 0


def bayes_predict_batch(spec: GeneratorSpec, X: np.ndarray) -> np.ndarray:
    """Row-wise ``bayes_predict`` over a feature matrix."""
    v = spec.variant
    X = np.asarray(X)
    if isinstance(v, IID):
        return np.full(X.shape[0], 1 if v.p >= 0.5 else 0, dtype=np.uint8)
    if isinstance(v, MarkovPersistence):
        p = np.where(X[:, -1] == 1, v.p_repeat_after_c_win, v.p_c_win_after_d_win)
        return (p >= 0.5).astype(np.uint8)
    theta = v.theta_star
    if X.shape[1] < theta.n:
        raise ContractError("windows are shorter than the generator's memory")
    tail = X[:, -theta.n:]
    return (theta.bias + tail @ theta.weights >= 0.0).astype(np.uint8)


def write_history_csv(history, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["outcome"])
        w.writerows([int(o)] for o in history)


def read_history_csv(path) -> np.ndarray:
    with open(Path(path), newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["outcome"]:
            raise ContractError(f"expected header ['outcome'], got {header!r}")
        values = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 1 or row[0] not in ("0", "1"):
                raise ContractError(f"line {lineno}: outcome must be 0 or 1, got {row!r}")
            values.append(int(row[0]))
    return np.array(values, dtype=np.uint8)


def stationary_window_probabilities(theta: Theta) -> np.ndarray:
    """Exact stationary distribution of the window chain for a logistic truth.

    Only practical for small ``n``; used by the calibration script.
    """
    n = theta.n
    if n > 12:
        raise ContractError("exact stationary distribution is limited to n <= 12")
    size = 1 << n
    mask = size - 1
    p = _window_table(theta)
    P = np.zeros((size, size))
    for s in range(size):
        P[s, ((s << 1) | 1) & mask] += p[s]
        P[s, (s << 1) & mask] += 1.0 - p[s]
    evals, evecs = np.linalg.eig(P.T)
    k = int(np.argmin(np.abs(evals - 1.0)))
    pi = np.real(evecs[:, k])
    pi = pi / pi.sum()
    if not math.isclose(pi.sum(), 1.0) or np.any(pi < -1e-12):
        raise ContractError("window chain has no unique stationary distribution")
    return np.clip(pi, 0.0, None)
