"""Exit criteria for the build, one test per criterion.

Each test records a PASS/FAIL line that pytest prints in its terminal
summary under "acceptance criteria".
"""

import itertools
import json
import math
import time

import numpy as np

from bidalloc import cli, verify
from bidalloc.classifier import Theta, TrainConfig, cost, predict, predict_batch, train
from bidalloc.game_sim import (
    GeneratorSpec,
    LogisticTruth,
    SplitSpec,
    bayes_predict_batch,
    calibrated_theta,
    featurize,
    generate,
    split,
)
from bidalloc.metrics import DelayStats, empirical_tail, markov_bound, verify_bound
from bidalloc.pipeline import DEFAULT_SWEEP, RunConfig, bench, simulate, summary_without_timing

REFERENCE_AVERAGES_US = [2.5810, 0.5226, 0.2664, 0.2391, 0.1329, 0.0354, 0.0230]


def test_ac1_gradient_matches_finite_differences(record_criterion):
    t0 = time.perf_counter()
    res = verify.check_gradient_finite_difference(np.random.default_rng(1), instances=20, tol=1e-6)
    elapsed = time.perf_counter() - t0
    record_criterion(1, res.passed and elapsed < 1.0,
                     f"gradient vs central FD, {res.detail}, {elapsed:.2f}s (< 1s)")


def test_ac2_cost_at_zero_is_ln2(record_criterion):
    rng = np.random.default_rng(2)
    worst = 0.0
    for m, n in [(1, 1), (50, 15), (1000, 15), (17, 3), (333, 40)]:
        for _ in range(5):
            data = verify.random_dataset(rng, m, n)
            worst = max(worst, abs(cost(Theta.zeros(n), data, 0.0) - math.log(2)))
    record_criterion(2, worst <= 1e-12, f"max |J(0) - ln 2| = {worst:.2e} (<= 1e-12)")


def test_ac3_decision_rule_is_sign_test(record_criterion):
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    windows = list(itertools.product((0, 1), repeat=4))
    mismatches = 0
    for _ in range(100):
        theta = Theta(rng.normal(), rng.normal(size=4))
        for x in windows:
            score = theta.bias + sum(float(w) * xi for w, xi in zip(theta.weights, x))
            mismatches += predict(theta, x) != (1 if score >= 0 else 0)
    elapsed = time.perf_counter() - t0
    record_criterion(3, mismatches == 0 and elapsed < 1.0,
                     f"{mismatches} mismatches over 1600 (theta, window) pairs, {elapsed:.2f}s (< 1s)")


def test_ac4_markov_bound(record_criterion):
    t0 = time.perf_counter()
    stats = DelayStats.from_samples(REFERENCE_AVERAGES_US)
    bound = markov_bound(stats.mean, 1000.0).bound
    ok_reference = abs(stats.mean - 0.5429) <= 1e-4 and abs(bound - 5.429e-4) <= 1e-7

    rng = np.random.default_rng(4)
    violations = 0
    for i in range(1000):
        size = int(rng.integers(1, 500))
        xs = [rng.exponential(2.0, size), rng.uniform(0, 10, size), rng.pareto(1.1, size)][i % 3]
        s = DelayStats.from_samples(xs)
        d = float(rng.choice(xs)) if i % 4 == 0 else float(rng.exponential(3.0))
        if d <= 0:
            d = 1.0
        holds, _ = verify_bound(s, d)
        violations += (not holds) or empirical_tail(s, d) > s.mean / d
    elapsed = time.perf_counter() - t0
    record_criterion(4, ok_reference and violations == 0 and elapsed < 5.0,
                     f"E[D]={stats.mean:.5f} us, bound={bound:.4e}; "
                     f"{violations} violations over 1000 random sets, {elapsed:.2f}s (< 5s)")


def test_ac5_utilization_band(record_criterion, tmp_path):
    rows = []
    ok = True
    for n in (1000, 5000, 10000):
        u = simulate(RunConfig(test_samples=n, output_dir=str(tmp_path / str(n))), write=False).utilization
        exact_sum = u.exact_share_c + u.exact_share_d == 100
        ok &= exact_sum and u.share_c + u.share_d == 100.0 and u.overall == 100.0
        ok &= 55.0 <= u.share_c <= 65.0
        rows.append(f"n={n}: C {u.share_c:.2f} D {u.share_d:.2f} overall {u.overall:.2f}")
    record_criterion(5, ok, "; ".join(rows) + " (C in [55, 65], C + D = 100.00)")


def test_ac6_accuracy_within_two_points_of_oracle(record_criterion):
    t0 = time.perf_counter()
    window, m, test = 15, 1000, 10000
    spec = GeneratorSpec(LogisticTruth(calibrated_theta()), seed=2015)
    data = featurize(generate(spec, window + m + test), window)
    train_set, test_set = split(data, SplitSpec(m / (m + test)))
    theta, _ = train(train_set, TrainConfig())
    learned = 100 * float(np.mean(predict_batch(theta, test_set.features) == test_set.labels))
    oracle = 100 * float(np.mean(bayes_predict_batch(spec, test_set.features) == test_set.labels))
    elapsed = time.perf_counter() - t0
    ok = 90.0 <= oracle <= 92.0 and abs(learned - oracle) <= 2.0 and elapsed < 10.0
    record_criterion(6, ok, f"oracle {oracle:.2f}% (in [90, 92]), classifier {learned:.2f}% "
                            f"(|diff| {abs(learned - oracle):.2f} <= 2), {elapsed:.2f}s (< 10s)")


def test_ac7_simulate_is_deterministic(record_criterion, tmp_path):
    docs = []
    for _ in range(2):
        rc = cli.main(["simulate", "--seed", "2015", "--out", str(tmp_path)])
        docs.append((rc, json.loads((tmp_path / "summary.json").read_text())))
    (rc_a, a), (rc_b, b) = docs
    same = summary_without_timing(a) == summary_without_timing(b)
    record_criterion(7, rc_a == rc_b == 0 and same,
                     "two simulate runs give identical summary.json outside timing fields")


def test_ac8_delay_trend(record_criterion):
    rows = bench(RunConfig(), DEFAULT_SWEEP, repeats=51)
    ok = [r.n_requests for r in rows] == list(DEFAULT_SWEEP)
    worst = -math.inf
    for prev, cur in zip(rows, rows[1:]):
        noise = max(prev.noise_us / prev.n_requests, cur.noise_us / cur.n_requests)
        excess = cur.avg_per_request_us - (prev.avg_per_request_us + 2 * noise)
        worst = max(worst, excess)
    ok &= worst <= 0
    table = ", ".join(f"{r.n_requests}:{r.avg_per_request_us:.4f}" for r in rows)
    record_criterion(8, ok, f"avg us/request {table}; non-increasing within 2x IQR noise")
