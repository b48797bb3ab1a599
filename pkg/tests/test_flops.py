# tests/test_flops.py
from fractions import Fraction

import pytest

from rsthp.errors import ConfigError
from rsthp.flops import (
    FLOPS_SCHEMES,
    FlopsModel,
    flops_combiner,
    flops_lq,
    flops_matmul,
    flops_scheme,
    flops_table,
    rs_overhead,
    zf_thp_steps,
)


def _f(scheme, n=12, K=6):
    return flops_scheme(FlopsModel(scheme=scheme, n=n, K=K))


class TestPrimitives:
    def test_matmul(self):
        assert flops_matmul(2, 3, 4) == 176
        with pytest.raises(ConfigError):
            flops_matmul(0, 3, 4)

    def test_lq(self):
        assert flops_lq(12, 12) == 9216
        assert flops_lq(12, 24) == Fraction(8 * 144) * (24 - 4)
        with pytest.raises(ConfigError):
            flops_lq(5, 3)

    def test_combiners(self):
        assert flops_combiner("minmax", 12, 6) == 84
        assert flops_combiner("mrc", 12, 6) == 1260
        assert flops_combiner("mmsec", 12, 6) == 1444
        with pytest.raises(ConfigError):
            flops_combiner("zf", 12, 6)


class TestSchemes:
    def test_reference_values(self):
        assert _f("zf-thp") == 11176
        assert _f("mmse-thp") == 25000
        assert _f("rs-zf-thp-minmax") == 12484
        assert _f("rs-zf-thp-mrc") == 13660
        assert _f("rs-zf-thp-mmsec") == 14036

    def test_steps_sum_to_total(self):
        for n in (4, 8, 12, 16):
            assert sum(v for _, v in zf_thp_steps(n)) == _f("zf-thp", n=n, K=2)
        assert zf_thp_steps(12)[0] == ("lq", 9216)

    @pytest.mark.parametrize("n", [4, 8, 12, 16])
    @pytest.mark.parametrize("base", ["zf", "mmse"])
    @pytest.mark.parametrize("kind", ["minmax", "mrc"])
    def test_rs_composition(self, n, base, kind):
        K = 2
        total = _f(f"rs-{base}-thp-{kind}", n=n, K=K)
        assert total == _f(f"{base}-thp", n=n, K=K) + rs_overhead(n) + flops_combiner(kind, n, K)


    @pytest.mark.parametrize("n", [4, 8, 12, 16])
    @pytest.mark.parametrize("base", ["zf", "mmse"])
    def test_mmsec_composition(self, n, base):
        # комбайнер MMSEc не меняет тип прекодера; +16n - формирование ковариации
        K = 2
        total = _f(f"rs-{base}-thp-mmsec", n=n, K=K)
        assert total == _f(f"{base}-thp", n=n, K=K) + rs_overhead(n) + flops_combiner("mmsec", n, K) + 16 * n
    @pytest.mark.parametrize("n", [4, 8, 12, 16])
    def test_mmse_costs_more(self, n):
        for zf_name in ("zf-thp", "rs-zf-thp-minmax", "rs-zf-thp-mrc", "rs-zf-thp-mmsec"):
            mmse_name = zf_name.replace("zf", "mmse")
            assert _f(mmse_name, n=n, K=4) - _f(zf_name, n=n, K=4) == 8 * n ** 3

    def test_ordering(self):
        values = [_f(s) for s in ("zf-thp", "rs-zf-thp-minmax", "rs-zf-thp-mrc", "rs-zf-thp-mmsec")]
        assert values == sorted(values)

    def test_exact_rational(self):
        v = _f("rs-zf-thp-mmsec", n=5, K=3)
        assert isinstance(v, Fraction)

    def test_invalid(self):
        with pytest.raises(ConfigError, match="Неизвестная схема"):
            _f("zf-lin")
        with pytest.raises(ConfigError):
            _f("zf-thp", n=4, K=6)


class TestTable:
    def test_rows(self):
        rows = flops_table([4, 8, 12], 2)
        assert [r["n"] for r in rows] == [4, 8, 12]
        assert set(FLOPS_SCHEMES) <= set(rows[0])
        assert rows[2]["zf-thp"] == float(_f("zf-thp", n=12, K=2))
