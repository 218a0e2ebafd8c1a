import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bidalloc.allocator import (
    AllocationDecision,
    accuracy,
    advance_window,
    read_decisions_csv,
    resolve_bid,
    run_closed_loop,
    utilization,
    write_decisions_csv,
    write_utilization_csv,
)
from bidalloc.classifier import Theta, predict
from bidalloc.errors import ContractError
from bidalloc.game_sim import IID, GeneratorSpec, featurize, generate

labels = st.lists(st.integers(0, 1), min_size=1, max_size=300)


def decisions_from(preds, actuals=None):
    actuals = actuals if actuals is not None else [None] * len(preds)
    return [AllocationDecision(i, int(p), a if a is None else int(a))
            for i, (p, a) in enumerate(zip(preds, actuals))]


class TestResolveBid:
    def test_tie_grants_c(self):
        d = resolve_bid(Theta.zeros(15), np.zeros(15, dtype=int))
        assert d.predicted_winner == 1 and d.granted_to == "C"

    def test_negative_bias_grants_d(self):
        assert resolve_bid(Theta(-10.0, np.zeros(4)), [1, 0, 1, 0]).granted_to == "D"

    def test_matches_predict_exhaustively(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            theta = Theta(rng.normal(), rng.normal(size=4))
            for x in itertools.product((0, 1), repeat=4):
                assert resolve_bid(theta, x).predicted_winner == predict(theta, x)

    def test_dimension_mismatch(self):
        with pytest.raises(ContractError):
            resolve_bid(Theta.zeros(4), [1, 0])


class TestAdvanceWindow:
    def test_shift(self):
        assert advance_window([1, 0, 1], 0).tolist() == [0, 1, 0]

    def test_full_replacement(self):
        w = np.array([1, 1, 0, 0, 1])
        for o in [0, 1, 1, 0, 0]:
            w = advance_window(w, o)
        assert w.tolist() == [0, 1, 1, 0, 0]

    def test_does_not_mutate(self):
        w = np.array([1, 0, 1], dtype=np.uint8)
        advance_window(w, 0)
        assert w.tolist() == [1, 0, 1]

    def test_bad_outcome(self):
        with pytest.raises(ContractError):
            advance_window([1, 0], 2)

    def test_reproduces_featurize_rows(self):
        h = generate(GeneratorSpec(IID(0.5), 8), 300)
        data = featurize(h, 15)
        w = h[:15]
        for t in range(data.m):
            assert np.array_equal(w, data.features[t])
            w = advance_window(w, int(h[t + 15]))


class TestClosedLoop:
    def test_windows_follow_actual_outcomes(self):
        rng = np.random.default_rng(1)
        theta = Theta(rng.normal(), rng.normal(size=5))
        h = generate(GeneratorSpec(IID(0.5), 4), 205)
        data = featurize(h, 5)
        decisions = run_closed_loop(theta, data.features[0], data.labels, start_index=10)
        assert [d.request_index for d in decisions] == list(range(10, 10 + data.m))
        assert [d.actual_winner for d in decisions] == data.labels.tolist()
        assert [d.predicted_winner for d in decisions] == [predict(theta, x) for x in data.features]


class TestUtilization:
    def test_fifty_eight_percent_row(self):
        # 580 of 1000 grants to C is the only count giving 58.00%
        rep = utilization(decisions_from([1] * 580 + [0] * 420))
        assert (rep.share_c, rep.share_d, rep.overall) == (58.00, 42.00, 100.00)
        assert (rep.count_c, rep.count_d, rep.n_requests) == (580, 420, 1000)

    def test_all_c(self):
        rep = utilization(decisions_from([1] * 7))
        assert (rep.share_c, rep.share_d, rep.overall) == (100.0, 0.0, 100.0)

    def test_one_each(self):
        rep = utilization(decisions_from([1, 0]))
        assert (rep.share_c, rep.share_d) == (50.0, 50.0)

    def test_thirds_round_consistently(self):
        rep = utilization(decisions_from([1, 0, 0]))
        assert (rep.share_c, rep.share_d) == (33.33, 66.67)

    def test_actual_counts_retained(self):
        rep = utilization(decisions_from([1, 1, 0], [1, 0, 0]))
        assert rep.actual_count_c == 1
        assert utilization(decisions_from([1])).actual_count_c is None

    def test_empty(self):
        with pytest.raises(ContractError):
            utilization([])

    @given(labels)
    def test_shares_sum_to_100(self, preds):
        rep = utilization(decisions_from(preds))
        assert rep.count_c + rep.count_d == rep.n_requests == len(preds)
        assert rep.exact_share_c + rep.exact_share_d == 100
        assert abs(rep.share_c + rep.share_d - 100.0) < 1e-9
        assert 0 <= rep.share_c <= 100 and 0 <= rep.share_d <= 100
        assert abs(Fraction(rep.share_c) - rep.exact_share_c) <= Fraction(1, 200) + Fraction(1, 10**9)

    @given(labels, st.randoms())
    def test_permutation_invariant(self, preds, rnd):
        shuffled = preds[:]
        rnd.shuffle(shuffled)
        assert utilization(decisions_from(preds)) == utilization(decisions_from(shuffled))


class TestAccuracy:
    def test_perfect(self):
        assert accuracy(decisions_from([1, 0, 1], [1, 0, 1])).accuracy == 100.0

    def test_complement(self):
        assert accuracy(decisions_from([1, 0, 1], [0, 1, 0])).accuracy == 0.0

    def test_missing_actuals(self):
        with pytest.raises(ContractError):
            accuracy(decisions_from([1, 0]))
        with pytest.raises(ContractError):
            accuracy([])

    @given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=1))
    def test_flip_complements(self, pairs):
        preds, actuals = zip(*pairs)
        a = accuracy(decisions_from(preds, actuals))
        b = accuracy(decisions_from([1 - p for p in preds], actuals))
        assert a.exact + b.exact == 100
        assert a.correct + b.correct == a.total
        assert 0 <= a.correct <= a.total
        assert a.accuracy == pytest.approx(100 * a.correct / a.total)


class TestCsv:
    def test_decisions_round_trip(self, tmp_path):
        ds = decisions_from([1, 0, 1], [1, None, 0])
        path = tmp_path / "decisions.csv"
        write_decisions_csv(ds, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "request_index,predicted_winner,actual_winner"
        assert lines[2] == "1,0,"
        assert read_decisions_csv(path) == ds

    def test_utilization_csv(self, tmp_path):
        path = tmp_path / "u.csv"
        write_utilization_csv(utilization(decisions_from([1] * 601 + [0] * 399)), path)
        header, row = path.read_text().splitlines()
        assert header.startswith("n_requests,share_C_pct,share_D_pct,overall_pct")
        assert row.startswith("1000,60.10,39.90,100.00")
