"""Binary logistic regression over windows of past bid outcomes.

A window ``x`` holds the last ``n`` encounter results (1 = player C won,
0 = player D won), oldest first. The model estimates

    P(C wins next | x) = sigmoid(bias + weights . x)

and grants the next bid to C when that probability is at least one half.
Parameters are fitted by minimising the mean cross-entropy with gradient
descent and a backtracking line search, starting from all zeros.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ContractError, NumericError

DEFAULT_WINDOW = 15

# Largest step accepted by the line search, as a multiple of 1/L where L
# bounds the Lipschitz constant of the gradient.
_MAX_STEP_FACTOR = 16.0
_ARMIJO = 0.5
_MAX_BACKTRACKS = 60


def as_window(x, n: int | None = None) -> np.ndarray:
    """Validate a single binary window and return it as a 1-D uint8 array."""
    arr = np.asarray(x)
    if arr.ndim != 1 or arr.size == 0:
        raise ContractError(f"window must be a non-empty 1-D sequence, got shape {arr.shape}")
    if arr.dtype.kind in "ub":
        binary = arr.max() <= 1
    elif arr.dtype.kind == "i":
        binary = arr.min() >= 0 and arr.max() <= 1
    else:
        binary = np.all((arr == 0) | (arr == 1))
    if not binary:
        raise ContractError("window slots must be 0 or 1")
    if n is not None and arr.size != n:
        raise ContractError(f"window length {arr.size} does not match n={n}")
    return arr if arr.dtype == np.uint8 else arr.astype(np.uint8)


@dataclass(eq=False)
class Theta:
    """Classifier parameters: a bias plus one weight per window slot."""

    bias: float
    weights: np.ndarray

    def __post_init__(self):
        self.bias = float(self.bias)
        self.weights = np.array(self.weights, dtype=np.float64).reshape(-1)
        if self.weights.size < 1:
            raise ContractError("theta needs at least one weight")
        if not (math.isfinite(self.bias) and np.all(np.isfinite(self.weights))):
            raise ContractError("theta entries must be finite")

    @property
    def n(self) -> int:
        return int(self.weights.size)

    @classmethod
    def zeros(cls, n: int) -> Theta:
        return cls(0.0, np.zeros(n))

    @classmethod
    def from_vector(cls, v) -> Theta:
        """Build from the augmented vector ``[bias, w1, ..., wn]``."""
        v = np.asarray(v, dtype=np.float64)
        return cls(v[0], v[1:])

    def as_vector(self) -> np.ndarray:
        return np.concatenate(([self.bias], self.weights))

    def scaled(self, c: float) -> Theta:
        return Theta(c * self.bias, c * self.weights)

    def __eq__(self, other):
        if not isinstance(other, Theta):
            return NotImplemented
        return self.bias == other.bias and np.array_equal(self.weights, other.weights)

    def __repr__(self):
        return f"Theta(bias={self.bias!r}, weights={self.weights.tolist()!r})"

    def to_dict(self) -> dict:
        return {"n": self.n, "bias": self.bias, "weights": self.weights.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> Theta:
        try:
            n, bias, weights = int(d["n"]), d["bias"], d["weights"]
        except (KeyError, TypeError) as exc:
            raise ContractError(f"malformed theta document: {exc}") from None
        if len(weights) != n:
            raise ContractError(f"theta document says n={n} but has {len(weights)} weights")
        return cls(bias, weights)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> Theta:
        return cls.from_dict(json.loads(text))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path) -> Theta:
        return cls.from_json(Path(path).read_text())


@dataclass(eq=False)
class TrainingSet:
    """Labelled windows: ``features`` is (m, n) binary, ``labels`` is (m,) binary."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.features)
        y = np.asarray(self.labels).reshape(-1)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise ContractError(f"training set needs m >= 1 and n >= 1, got shape {X.shape}")
        if X.shape[0] != y.shape[0]:
            raise ContractError(f"{X.shape[0]} feature rows but {y.shape[0]} labels")
        if not np.all((X == 0) | (X == 1)) or not np.all((y == 0) | (y == 1)):
            raise ContractError("features and labels must be 0 or 1")
        self.features = X.astype(np.uint8)
        self.labels = y.astype(np.uint8)

    @property
    def m(self) -> int:
        return int(self.labels.size)

    @property
    def n(self) -> int:
        return int(self.features.shape[1])

    def __len__(self):
        return self.m

    def __getitem__(self, i):
        return self.features[i], int(self.labels[i])

    def augmented(self) -> np.ndarray:
        """Feature matrix with a leading column of ones for the bias."""
        return np.hstack([np.ones((self.m, 1)), self.features.astype(np.float64)])


@dataclass(frozen=True)
class TrainConfig:
    grad_tolerance: float = 1e-6
    max_iterations: int = 10000
    l2_penalty: float = 0.0

    def __post_init__(self):
        if not self.grad_tolerance > 0:
            raise ContractError("grad_tolerance must be > 0")
        if self.max_iterations < 1:
            raise ContractError("max_iterations must be >= 1")
        if not self.l2_penalty >= 0:
            raise ContractError("l2_penalty must be >= 0")

    def to_dict(self) -> dict:
        return {
            "grad_tolerance": self.grad_tolerance,
            "max_iterations": self.max_iterations,
            "l2_penalty": self.l2_penalty,
        }

    @classmethod
    def from_dict(cls, d: dict) -> TrainConfig:
        return cls(
            grad_tolerance=float(d.get("grad_tolerance", cls.grad_tolerance)),
            max_iterations=int(d.get("max_iterations", cls.max_iterations)),
            l2_penalty=float(d.get("l2_penalty", cls.l2_penalty)),
        )


@dataclass(frozen=True)
class TrainReport:
    iterations: int
    final_cost: float
    final_grad_norm: float
    converged: bool
    cost_history: tuple = field(default=(), repr=False, compare=False)

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "final_cost": self.final_cost,
            "final_grad_norm": self.final_grad_norm,
            "converged": self.converged,
        }

    @classmethod
    def from_dict(cls, d: dict) -> TrainReport:
        return cls(int(d["iterations"]), float(d["final_cost"]),
                   float(d["final_grad_norm"]), bool(d["converged"]))


def sigmoid(z):
    """Logistic function, stable for any finite input.

    Accepts a scalar or an array. Non-finite input raises ``NumericError``.
    """
    z_arr = np.asarray(z, dtype=np.float64)
    if not np.all(np.isfinite(z_arr)):
        raise NumericError("sigmoid argument must be finite")
    e = np.exp(-np.abs(z_arr))
    out = np.where(z_arr >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return float(out) if out.ndim == 0 else out


def _check_dims(theta: Theta, n: int) -> None:
    if theta.n != n:
        raise ContractError(f"theta has {theta.n} weights but features have length {n}")


def logit_of(theta: Theta, x) -> float:
    """The linear score ``bias + weights . x`` for one window."""
    x = as_window(x)
    _check_dims(theta, x.size)
    return theta.bias + float(theta.weights @ x)


def hypothesis(theta: Theta, x) -> float:
    """P(C wins | x) under the model."""
    return sigmoid(logit_of(theta, x))


def predict(theta: Theta, x) -> int:
    """1 (C wins) iff the score is non-negative, i.e. the probability is >= 0.5."""
    return 1 if logit_of(theta, x) >= 0.0 else 0


def predict_batch(theta: Theta, X: np.ndarray) -> np.ndarray:
    """Vectorised ``predict`` over the rows of ``X``; no input validation."""
    return (theta.bias + X @ theta.weights >= 0.0).astype(np.uint8)


def _scores(v: np.ndarray, A: np.ndarray) -> np.ndarray:
    return A @ v


def _cost_vec(v, A, y, l2) -> float:
    z = _scores(v, A)
    m = y.size
    # log(1 + e^z) - y z is the per-sample cross-entropy without evaluating log(sigmoid).
    loss = np.sum(np.logaddexp(0.0, z) - y * z) / m
    w = v[1:]
    return float(loss + l2 / (2.0 * m) * (w @ w))


def _residuals(z: np.ndarray, y: np.ndarray) -> np.ndarray:
    # sigmoid(z) - y; for y == 1 use -sigmoid(-z) so saturation keeps precision.
    return np.where(y == 1, -sigmoid(-z), sigmoid(z))


def _grad_vec(v, A, y, l2) -> np.ndarray:
    m = y.size
    g = A.T @ _residuals(_scores(v, A), y) / m
    g[1:] += (l2 / m) * v[1:]
    return g


def _unpack(theta: Theta, data: TrainingSet, l2: float):
    if not isinstance(data, TrainingSet):
        raise ContractError("data must be a TrainingSet")
    if l2 < 0:
        raise ContractError("l2 must be >= 0")
    _check_dims(theta, data.n)
    return theta.as_vector(), data.augmented(), data.labels.astype(np.float64)


def cost(theta: Theta, data: TrainingSet, l2: float = 0.0) -> float:
    """Mean cross-entropy plus ``l2/(2m) * |weights|^2``; the bias is not penalised."""
    v, A, y = _unpack(theta, data, l2)
    return _cost_vec(v, A, y, l2)


def gradient(theta: Theta, data: TrainingSet, l2: float = 0.0) -> np.ndarray:
    """Gradient of ``cost`` as a length n+1 vector, bias component first."""
    v, A, y = _unpack(theta, data, l2)
    return _grad_vec(v, A, y, l2)


def train(data: TrainingSet, config: TrainConfig | None = None) -> tuple[Theta, TrainReport]:
    """Fit theta by gradient descent with Armijo backtracking from the zero vector.

    Stops when the gradient norm drops to ``config.grad_tolerance`` or after
    ``config.max_iterations`` steps. On separable data the unregularised
    optimum does not exist; the loop then runs out of iterations and the
    report says ``converged=False``.
    """
    config = config or TrainConfig()
    theta0 = Theta.zeros(data.n)
    v, A, y = _unpack(theta0, data, config.l2_penalty)
    l2, m = config.l2_penalty, data.m

    lipschitz = 0.25 * np.linalg.norm(A, 2) ** 2 / m + l2 / m
    max_step = _MAX_STEP_FACTOR / lipschitz
    step = 1.0 / lipschitz

    f = _cost_vec(v, A, y, l2)
    history = [f]
    g = _grad_vec(v, A, y, l2)
    gnorm = float(np.linalg.norm(g))
    it = 0
    while gnorm > config.grad_tolerance and it < config.max_iterations:
        s = min(2.0 * step, max_step)
        for _ in range(_MAX_BACKTRACKS):
            trial = v - s * g
            f_trial = _cost_vec(trial, A, y, l2)
            if f_trial <= f - _ARMIJO * s * gnorm * gnorm:
                break
            s *= 0.5
        else:
            # No sufficient decrease at any step size: float resolution reached.
            break
        v, f, step = trial, f_trial, s
        g = _grad_vec(v, A, y, l2)
        gnorm = float(np.linalg.norm(g))
        if not (math.isfinite(f) and math.isfinite(gnorm)):
            raise NumericError(f"non-finite cost or gradient at iteration {it + 1}")
        history.append(f)
        it += 1

    report = TrainReport(
        iterations=it,
        final_cost=f,
        final_grad_norm=gnorm,
        converged=gnorm <= config.grad_tolerance,
        cost_history=tuple(history),
    )
    return Theta.from_vector(v), report
