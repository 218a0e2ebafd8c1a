"""Property checks run by ``bidalloc verify``.

Each check is a function taking a numpy ``Generator`` and returning a
``PropertyResult``. Checks never raise on failure; an unexpected exception
is caught and reported as a failure.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import allocator, classifier, game_sim, metrics
from .classifier import Theta, TrainConfig, TrainingSet


@dataclass(frozen=True)
class PropertyResult:
    name: str
    passed: bool
    detail: str = ""


def random_dataset(rng: np.random.Generator, m: int = 50, n: int = 15) -> TrainingSet:
    X = rng.integers(0, 2, size=(m, n))
    y = rng.integers(0, 2, size=m)
    return TrainingSet(X, y)


def random_theta(rng: np.random.Generator, n: int = 15, scale: float = 1.0) -> Theta:
    return Theta(rng.normal(0, scale), rng.normal(0, scale, size=n))


def reference_cost(v, X, y, l2: float = 0.0):
    """Cross-entropy evaluated in extended precision, straight from the formula.

    Serves as the finite-difference oracle; it shares no code with
    ``classifier.cost``.
    """
    ld = np.longdouble
    v = np.asarray(v, dtype=ld)
    z = v[0] + np.asarray(X, dtype=ld) @ v[1:]
    h = ld(1) / (ld(1) + np.exp(-z))
    y = np.asarray(y, dtype=ld)
    m = ld(y.size)
    j = -(np.sum(y * np.log(h)) + np.sum((1 - y) * np.log(1 - h))) / m
    return j + ld(l2) / (2 * m) * np.sum(v[1:] ** 2)


def finite_difference_gradient(v, X, y, l2: float = 0.0, step: float = 1e-6) -> np.ndarray:
    v = np.asarray(v, dtype=np.longdouble)
    g = np.empty(v.size, dtype=np.longdouble)
    for k in range(v.size):
        e = np.zeros(v.size, dtype=np.longdouble)
        e[k] = step
        g[k] = (reference_cost(v + e, X, y, l2) - reference_cost(v - e, X, y, l2)) / (2 * step)
    return g.astype(np.float64)


def max_relative_error(a, b) -> float:
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), np.finfo(float).tiny)
    return float(np.max(np.abs(a - b) / denom))


def check_gradient_finite_difference(rng, instances: int = 20, tol: float = 1e-6,
                                     gradient_fn: Callable | None = None) -> PropertyResult:
    gradient_fn = gradient_fn or classifier.gradient
    worst = 0.0
    for _ in range(instances):
        data = random_dataset(rng)
        theta = random_theta(rng, data.n, scale=0.5)
        l2 = float(rng.choice([0.0, 0.5]))
        analytic = gradient_fn(theta, data, l2)
        numeric = finite_difference_gradient(theta.as_vector(), data.features, data.labels, l2)
        worst = max(worst, max_relative_error(analytic, numeric))
    return PropertyResult("gradient_finite_difference", worst <= tol,
                          f"max relative error {worst:.2e} over {instances} instances")


def check_cost_at_zero(rng, trials: int = 20) -> PropertyResult:
    worst = 0.0
    for _ in range(trials):
        data = random_dataset(rng, m=int(rng.integers(1, 200)), n=int(rng.integers(1, 20)))
        worst = max(worst, abs(classifier.cost(Theta.zeros(data.n), data) - math.log(2)))
    return PropertyResult("cost_zero_theta_is_ln2", worst <= 1e-12, f"max |J(0) - ln 2| {worst:.2e}")


def check_sigmoid_symmetry(rng) -> PropertyResult:
    z = rng.uniform(-700, 700, size=10_000)
    sym = float(np.max(np.abs(classifier.sigmoid(z) + classifier.sigmoid(-z) - 1.0)))
    grid = np.linspace(-30, 30, 4001)
    increasing = bool(np.all(np.diff(classifier.sigmoid(grid)) > 0))
    ok = sym <= 1e-15 and increasing
    return PropertyResult("sigmoid_symmetry_monotone", ok,
                          f"max |s(z)+s(-z)-1| {sym:.1e}, increasing={increasing}")


def check_convexity(rng, trials: int = 50) -> PropertyResult:
    worst = -np.inf
    for _ in range(trials):
        data = random_dataset(rng)
        a, b = random_theta(rng, data.n, 2.0), random_theta(rng, data.n, 2.0)
        t = float(rng.uniform(0, 1))
        mid = Theta.from_vector(t * a.as_vector() + (1 - t) * b.as_vector())
        gap = classifier.cost(mid, data) - (t * classifier.cost(a, data) + (1 - t) * classifier.cost(b, data))
        worst = max(worst, gap)
    return PropertyResult("cost_convexity", worst <= 1e-9, f"max chord gap {worst:.2e}")


def check_decision_rule(rng, n: int = 4, thetas: int = 100) -> PropertyResult:
    windows = [np.array(w) for w in itertools.product((0, 1), repeat=n)]
    mismatches = 0
    for _ in range(thetas):
        theta = random_theta(rng, n)
        for x in windows:
            score = theta.bias + sum(float(wk) * int(xk) for wk, xk in zip(theta.weights, x))
            if classifier.predict(theta, x) != (1 if score >= 0 else 0):
                mismatches += 1
    return PropertyResult("decision_rule_sign_test", mismatches == 0,
                          f"{mismatches} mismatches over {thetas * len(windows)} cases")


def check_scaling_invariance(rng, trials: int = 200) -> PropertyResult:
    bad = 0
    for _ in range(trials):
        theta = random_theta(rng, 6)
        x = rng.integers(0, 2, size=6)
        c = float(rng.uniform(0.01, 100))
        bad += classifier.predict(theta, x) != classifier.predict(theta.scaled(c), x)
    return PropertyResult("predict_scale_invariance", bad == 0, f"{bad} flips")


def check_train_determinism(rng) -> PropertyResult:
    spec = game_sim.GeneratorSpec(game_sim.MarkovPersistence(0.8, 0.3), int(rng.integers(2**32)))
    data = game_sim.featurize(game_sim.generate(spec, 315), 15)
    cfg = TrainConfig(l2_penalty=1.0)
    a, ra = classifier.train(data, cfg)
    b, rb = classifier.train(data, cfg)
    ok = a == b and ra == rb
    return PropertyResult("train_deterministic", ok, f"iterations {ra.iterations}")


def check_markov_sweep(rng, sets: int = 1000) -> PropertyResult:
    failures = 0
    for i in range(sets):
        size = int(rng.integers(1, 200))
        kind = i % 3
        if kind == 0:
            s = rng.exponential(1.0, size)
        elif kind == 1:
            s = rng.uniform(0, 10, size)
        else:
            s = rng.pareto(1.5, size)
        stats = metrics.DelayStats.from_samples(s)
        d_max = float(rng.choice(s)) if rng.random() < 0.3 else float(rng.exponential(2.0)) + 1e-9
        holds, rep = metrics.verify_bound(stats, d_max)
        failures += not holds
    return PropertyResult("markov_bound_sweep", failures == 0,
                          f"{failures} violations over {sets} sample sets")


def check_window_featurize_equivalence(rng) -> PropertyResult:
    n = int(rng.integers(1, 8))
    h = rng.integers(0, 2, size=int(rng.integers(n + 1, 100)))
    data = game_sim.featurize(h, n)
    w = h[:n]
    ok = True
    for t in range(data.m):
        ok &= np.array_equal(w, data.features[t])
        w = allocator.advance_window(w, int(h[t + n]))
    return PropertyResult("advance_window_matches_featurize", bool(ok), f"n={n}, m={data.m}")


def check_bayes_logistic(rng) -> PropertyResult:
    theta = random_theta(rng, 5)
    spec = game_sim.GeneratorSpec(game_sim.LogisticTruth(theta), 0)
    windows = list(itertools.product((0, 1), repeat=5))
    bad = sum(game_sim.bayes_predict(spec, x) != classifier.predict(theta, x) for x in windows)
    return PropertyResult("bayes_matches_logistic_predict", bad == 0, f"{bad} mismatches")


def check_utilization_sums(rng, trials: int = 200) -> PropertyResult:
    bad = 0
    for _ in range(trials):
        preds = rng.integers(0, 2, size=int(rng.integers(1, 500)))
        rep = allocator.utilization(
            allocator.AllocationDecision(i, int(p)) for i, p in enumerate(preds)
        )
        bad += rep.exact_share_c + rep.exact_share_d != 100
        bad += round(rep.share_c + rep.share_d, 9) != 100.0
    return PropertyResult("utilization_shares_sum_to_100", bad == 0, f"{bad} failures")


CHECKS: list[Callable[[np.random.Generator], PropertyResult]] = [
    check_sigmoid_symmetry,
    check_cost_at_zero,
    check_gradient_finite_difference,
    check_convexity,
    check_decision_rule,
    check_scaling_invariance,
    check_train_determinism,
    check_markov_sweep,
    check_window_featurize_equivalence,
    check_bayes_logistic,
    check_utilization_sums,
]


def run_all(seed: int, checks=None) -> list[PropertyResult]:
    """Run every check with its own RNG stream spawned from ``seed``."""
    checks = CHECKS if checks is None else checks
    streams = np.random.SeedSequence(seed).spawn(len(checks))
    results = []
    for check, ss in zip(checks, streams):
        try:
            results.append(check(np.random.default_rng(ss)))
        except Exception as exc:  # report, never raise
            name = check.__name__.removeprefix("check_")
            results.append(PropertyResult(name, False, f"raised {type(exc).__name__}: {exc}"))
    return results
