# tests/test_combining.py
import numpy as np
import pytest

from rsthp.combining import (
    build_combiner,
    combined_sinr,
    minmax_combiner,
    minmax_select,
    mmsec_combiner,
    mmsec_sinr_closed_form,
    mrc_combiner,
    mrc_sinr_closed_form,
    per_antenna_common_sinrs,
)
from rsthp.errors import CombinerError, ConfigError
from tests.conftest import cgauss


def _instance(rng, n=3, nt=6, m=6):
    Hk = cgauss(rng, n, nt)
    p_c = cgauss(rng, nt, 1)[:, 0] * 2.0
    q = cgauss(rng, nt, m) * 0.7
    return Hk, p_c, q, float(rng.uniform(0.1, 2.0))


class TestGenericSinr:
    def test_zero_combiner(self, rng):
        Hk, p_c, q, s2 = _instance(rng)
        with pytest.raises(CombinerError):
            combined_sinr(np.zeros(3), Hk, p_c, q, s2)

    def test_scale_invariant(self, rng):
        Hk, p_c, q, s2 = _instance(rng)
        w = cgauss(rng, 3, 1)[:, 0]
        assert combined_sinr(w, Hk, p_c, q, s2) == pytest.approx(combined_sinr((2 - 3j) * w, Hk, p_c, q, s2))

    def test_per_antenna_matches_unit_combiners(self, rng):
        Hk, p_c, q, s2 = _instance(rng, n=4)
        table = per_antenna_common_sinrs(Hk, p_c, q, s2)
        for i in range(4):
            assert table[i] == pytest.approx(combined_sinr(minmax_combiner(4, i).w, Hk, p_c, q, s2), rel=1e-12)


class TestClosedForms:
    @pytest.mark.parametrize("trial", range(50))
    def test_mrc(self, trial):
        Hk, p_c, q, s2 = _instance(np.random.default_rng(trial))
        w = mrc_combiner(Hk, p_c).w
        assert mrc_sinr_closed_form(Hk, p_c, q, s2) == pytest.approx(combined_sinr(w, Hk, p_c, q, s2), rel=1e-9)

    @pytest.mark.parametrize("trial", range(50))
    def test_mmsec(self, trial):
        Hk, p_c, q, s2 = _instance(np.random.default_rng(1000 + trial))
        w = mmsec_combiner(Hk, p_c, q, s2).w
        assert mmsec_sinr_closed_form(Hk, p_c, q, s2) == pytest.approx(combined_sinr(w, Hk, p_c, q, s2), rel=1e-8)


class TestDominance:
    def test_mmsec_dominates(self):
        rng = np.random.default_rng(77)
        violations = 0
        for _ in range(10_000):
            Hk, p_c, q, s2 = _instance(rng, n=int(rng.integers(1, 4)))
            g_mmse = combined_sinr(mmsec_combiner(Hk, p_c, q, s2).w, Hk, p_c, q, s2)
            g_mrc = combined_sinr(mrc_combiner(Hk, p_c).w, Hk, p_c, q, s2)
            g_best_antenna = per_antenna_common_sinrs(Hk, p_c, q, s2).max()
            tol = 1e-10 * g_mmse
            violations += int(g_mmse + tol < g_mrc) + int(g_mmse + tol < g_best_antenna)
        assert violations == 0


class TestSelection:
    def test_minmax_ties_lowest_index(self):
        # антенны 2 и 1 при счёте с единицы
        assert minmax_select([[1.0, 3.0, 3.0], [2.0, 1.0]]) == [1, 0]

    def test_mrc_zero_channel(self):
        with pytest.raises(CombinerError):
            mrc_combiner(np.zeros((2, 3)), np.ones(3))

    def test_mmsec_zero_channel(self):
        with pytest.raises(CombinerError):
            mmsec_combiner(np.zeros((2, 3)), np.ones(3), np.ones((3, 3)), 1.0)

    def test_build_dispatch(self, rng):
        Hk, p_c, q, s2 = _instance(rng)
        assert build_combiner("minmax", Hk, p_c, q, s2, antenna=2).w[2] == 1.0
        assert build_combiner("mrc", Hk, p_c, q, s2).kind == "mrc"
        assert build_combiner("mmsec", Hk, p_c, q, s2).kind == "mmsec"
        with pytest.raises(ConfigError):
            build_combiner("none", Hk, p_c, q, s2)
