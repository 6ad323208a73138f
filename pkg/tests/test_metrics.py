import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from conftest import matrix
from streamfill.core import MissingnessMask
from streamfill.errors import DegenerateMean, DegenerateVariance, UnimputedCell
from streamfill.metrics import MetricsReport, kge, nse, rmse, score, score_imputation


def kge_oracle(o, s):
    # written with plain Python so it shares nothing with the implementation
    n = len(o)
    mo, ms = sum(o) / n, sum(s) / n
    so = math.sqrt(sum((x - mo) ** 2 for x in o) / n)
    ss = math.sqrt(sum((x - ms) ** 2 for x in s) / n)
    r = sum((a - mo) * (b - ms) for a, b in zip(o, s)) / n / (so * ss)
    return 1 - math.sqrt((r - 1) ** 2 + (ms / mo - 1) ** 2 + (ss / so - 1) ** 2)


def nse_oracle(o, s):
    mo = sum(o) / len(o)
    return 1 - sum((a - b) ** 2 for a, b in zip(o, s)) / sum((a - mo) ** 2 for a in o)


finite = st.floats(-1e3, 1e3, allow_nan=False)
positive = st.floats(0.1, 1e3)


class TestExamples:
    def test_perfect(self):
        assert kge([1, 2, 3], [1, 2, 3]) == 1.0
        assert nse([1, 2, 3], [1, 2, 3]) == 1.0
        assert rmse([1, 2, 3], [1, 2, 3]) == 0.0

    def test_kge_doubling(self):
        assert kge([1, 2, 3, 4], [2, 4, 6, 8]) == pytest.approx(1 - math.sqrt(2), abs=1e-12)
        assert kge([1, 2, 3, 4], [2, 4, 6, 8]) == pytest.approx(-0.41421, abs=1e-5)

    def test_kge_constant_obs(self):
        with pytest.raises(DegenerateVariance):
            kge([1, 1, 1], [1, 2, 3])
        with pytest.raises(DegenerateVariance):
            kge([1, 2, 3], [2, 2, 2])

    def test_kge_zero_mean(self):
        with pytest.raises(DegenerateMean):
            kge([-1, 0, 1], [-1, 0, 2])

    def test_nse(self):
        assert nse([1, 2, 3], [2, 2, 2]) == 0.0
        assert nse([1, 2, 3], [1, 2, 5]) == pytest.approx(-1.0, abs=1e-15)
        with pytest.raises(DegenerateVariance):
            nse([4, 4], [1, 2])

    def test_rmse(self):
        assert rmse([0, 0], [3, 4]) == pytest.approx(math.sqrt(12.5), abs=1e-12)
        assert rmse([5], [7]) == 2.0

    def test_length_checks(self):
        with pytest.raises(ValueError):
            kge([1, 2], [1, 2, 3])
        with pytest.raises(ValueError):
            nse([1], [1])

    def test_kge_squared_correlation_term(self):
        # anticorrelated series: an unsquared (r - 1) would give a negative
        # radicand contribution, squared keeps KGE real
        o = [1.0, 2.0, 3.0, 4.0]
        s = [4.0, 3.0, 2.0, 1.0]
        assert kge(o, s) == pytest.approx(1 - 2.0, abs=1e-12)


class TestProperties:
    @given(arrays(np.float64, st.integers(2, 50), elements=positive), st.floats(0.1, 10))
    def test_affine_sensitivity(self, obs, a):
        if obs.std() < 1e-6 * obs.mean():
            return
        assert kge(obs, a * obs) == pytest.approx(1 - math.sqrt(2 * (a - 1) ** 2), abs=1e-9)

    @settings(max_examples=60)
    @given(st.integers(2, 40).flatmap(lambda n: st.tuples(
        arrays(np.float64, n, elements=positive), arrays(np.float64, n, elements=positive))))
    def test_against_oracle(self, pair):
        o, s = pair
        if o.std() < 1e-6 or s.std() < 1e-6:
            return
        assert kge(o, s) == pytest.approx(kge_oracle(o.tolist(), s.tolist()), rel=1e-9, abs=1e-9)
        assert nse(o, s) == pytest.approx(nse_oracle(o.tolist(), s.tolist()), rel=1e-9, abs=1e-9)

    @given(st.integers(2, 40).flatmap(lambda n: st.tuples(
        arrays(np.float64, n, elements=finite), arrays(np.float64, n, elements=finite))))
    def test_bounds(self, pair):
        o, s = pair
        r = rmse(o, s)
        assert r >= 0
        assert r ** 2 == pytest.approx(np.mean((o - s) ** 2), rel=1e-12, abs=1e-300)
        # tiny spreads can underflow to a zero variance, which is reported as degenerate
        for metric in (nse, kge):
            try:
                assert metric(o, s) <= 1.0
            except (DegenerateVariance, DegenerateMean):
                pass

    @settings(max_examples=50)
    @given(arrays(np.float64, 12, elements=positive), arrays(np.float64, 12, elements=positive),
           st.permutations(range(12)))
    def test_permutation_invariance(self, o, s, perm):
        if o.std() < 1e-6 or s.std() < 1e-6:
            return
        p = np.asarray(perm)
        a, b = score(o, s), score(o[p], s[p])
        for x, y in zip(a, b):
            assert x == pytest.approx(y, rel=1e-12, abs=1e-12)


class TestScoreImputation:
    def _setup(self):
        truth = matrix([[1.0, 10.0], [2.0, 20.0], [4.0, 30.0], [8.0, 50.0], [3.0, 15.0]], ["A", "B"])
        return truth

    def test_perfect(self):
        truth = self._setup()
        m = MissingnessMask([[0, 0], [1, 0], [2, 1], [3, 1]], 0.0, 0)
        res = score_imputation(truth, truth, m)
        assert [r.scores for r in res] == [(1.0, 1.0, 0.0), (1.0, 1.0, 0.0)]

    def test_hand_built_masks(self):
        truth = self._setup()
        imputed = truth.replace(values=truth.values + np.array([[0.5, -1.0]]) * np.arange(1, 6)[:, None])
        m = MissingnessMask([[0, 0], [1, 0], [2, 0], [3, 0], [0, 1], [1, 1], [3, 1], [4, 1]], 0.0, 0)
        res = {r.station: r for r in score_imputation(truth, imputed, m)}
        oa = [1.0, 2.0, 4.0, 8.0]
        sa = [1.5, 3.0, 5.5, 10.0]
        ob = [10.0, 20.0, 50.0, 15.0]
        sb = [9.0, 18.0, 46.0, 10.0]
        assert res["A"].scores.kge == pytest.approx(kge_oracle(oa, sa), abs=1e-12)
        assert res["A"].scores.nse == pytest.approx(nse_oracle(oa, sa), abs=1e-12)
        assert res["B"].scores.kge == pytest.approx(kge_oracle(ob, sb), abs=1e-12)
        assert res["B"].scores.rmse == pytest.approx(math.sqrt((1 + 4 + 16 + 25) / 4), abs=1e-12)

    def test_station_without_cells_skipped(self):
        truth = self._setup()
        res = score_imputation(truth, truth, MissingnessMask([[0, 0], [1, 0], [2, 0]], 0.0, 0))
        assert res[1].station == "B" and res[1].scores is None and res[1].skipped

    def test_pooled(self):
        truth = self._setup()
        m = MissingnessMask([[0, 0], [1, 1], [2, 1]], 0.0, 0)
        res = score_imputation(truth, truth, m, per_station=False)
        assert len(res) == 1 and res[0].station == "*" and res[0].n_cells == 3

    def test_unimputed(self):
        truth = self._setup()
        holes = truth.replace(mask=np.ones(truth.shape, bool) & (np.arange(5)[:, None] != 0))
        with pytest.raises(UnimputedCell):
            score_imputation(truth, holes, MissingnessMask([[0, 0], [1, 0]], 0.0, 0))


class TestReport:
    def test_aggregates_are_means(self, rng):
        rep = MetricsReport()
        from streamfill.metrics import StationScore, ScoreTriple

        raw = {}
        for seed in (0, 1, 2):
            triples = [ScoreTriple(*rng.random(3)) for _ in range(4)]
            raw[seed] = np.mean(triples, axis=0)
            rep.add("qm", 0.2, seed, [StationScore(f"S{i}", t) for i, t in enumerate(triples)])
        rep.add("qm", 0.2, 0, [StationScore("X", None, "0 masked cells")])
        expect = np.mean(list(raw.values()), axis=0)
        np.testing.assert_allclose(rep.aggregates[("qm", 0.2)], expect, rtol=1e-12)
        assert len(rep.records) == 12 and len(rep.skipped) == 1
