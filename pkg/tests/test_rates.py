# tests/test_rates.py
import numpy as np
import pytest

import config
import rsthp.rates as rates_mod
from rsthp.channel import ErrorModel, SystemConfig, assemble, draw_error
from rsthp.combining import build_combiner, per_antenna_common_sinrs
from rsthp.errors import ConfigError, RankDeficiencyError
from rsthp.numerics import RngStreams
from rsthp.precoding import (
    RsPrecoder,
    common_precoder,
    effective_private_columns,
    mmse_thp_filters,
    transmit_columns,
    with_beta,
    zf_thp_filters,
)
from rsthp.rates import (
    average_rates,
    closed_form_common_sinr,
    ergodic_sum_rate,
    instantaneous_rates,
    mrc_norm_expansion,
    private_sinrs,
)
from rsthp.schemes import Scheme
from tests.conftest import cgauss

PERFECT = ErrorModel(sigma_e2=0.0)


class TestPrivateSinr:
    @pytest.mark.parametrize("structure", ["cthp", "dthp"])
    def test_perfect_csit(self, rng, structure):
        H = cgauss(rng, 4, 4)
        f = with_beta(zf_thp_filters(H, structure), 100.0, 0.0)
        g = private_sinrs(assemble(H, np.zeros_like(H)), f, effective_private_columns(f), 1.0)
        gain = f.beta ** 2 * (np.ones(4) if structure == "cthp" else f.l_diag() ** 2)
        assert np.allclose(g, gain)

    def test_error_adds_interference(self, rng):
        H = cgauss(rng, 4, 4)
        f = with_beta(zf_thp_filters(H, "dthp"), 100.0, 0.0)
        q = effective_private_columns(f)
        clean = private_sinrs(assemble(H, np.zeros_like(H)), f, q, 1.0)
        noisy = private_sinrs(assemble(H, 0.3 * cgauss(rng, 4, 4)), f, q, 1.0)
        assert np.sum(np.log2(1 + noisy)) < np.sum(np.log2(1 + clean))

    @pytest.mark.parametrize("design,structure", [("zf", "cthp"), ("zf", "dthp"), ("mmse", "cthp"), ("mmse", "dthp")])
    def test_error_leaks_through_transmitted_symbols(self, rng, small_system, design, structure):
        H = cgauss(rng, 4, 4)
        H_tilde = 0.3 * cgauss(rng, 4, 4)
        built = Scheme(design=design, structure=structure).build(H, small_system)
        f, rs = built.filters, built.rs
        E = H @ rs.q_cols
        signal = np.abs(np.diag(E)) ** 2
        residual = np.sum(np.abs(E) ** 2, axis=1) - signal
        leakage = np.sum(np.abs(H_tilde @ rs.tx_cols) ** 2, axis=1)
        expected = signal / (residual + leakage + 1.0)
        g = private_sinrs(assemble(H, H_tilde), f, rs.q_cols, 1.0, tx_cols=rs.tx_cols)
        assert np.allclose(g, expected, rtol=1e-10)
        # по умолчанию направления берутся из фильтров
        assert np.allclose(private_sinrs(assemble(H, H_tilde), f, rs.q_cols, 1.0), g, rtol=1e-12)

    def test_feedback_does_not_amplify_leakage(self, rng):
        # столбцы β·Q^H: утечка на антенне i равна β²‖h̃_i‖²
        H = cgauss(rng, 4, 4)
        H_tilde = 0.3 * cgauss(rng, 4, 4)
        f = with_beta(zf_thp_filters(H, "dthp"), 100.0, 0.0)
        g = private_sinrs(assemble(H, H_tilde), f, effective_private_columns(f), 1.0)
        leakage = f.beta ** 2 * np.linalg.norm(H_tilde, axis=1) ** 2
        assert np.allclose(g, f.beta ** 2 * f.l_diag() ** 2 / (leakage + 1.0), rtol=1e-9)

    def test_linear_zf_leakage(self, rng, small_system):
        H = cgauss(rng, 4, 4)
        H_tilde = 0.2 * cgauss(rng, 4, 4)
        rs = Scheme.parse("zf").build(H, small_system).rs
        g = private_sinrs(assemble(H, H_tilde), None, rs.q_cols, 1.0)
        leakage = np.sum(np.abs(H_tilde @ rs.q_cols) ** 2, axis=1)
        signal = np.abs(np.diag(H @ rs.q_cols)) ** 2
        assert np.allclose(g, signal / (leakage + 1.0), rtol=1e-8)


class TestClosedForm:
    @pytest.mark.parametrize("trial", range(20))
    def test_matches_generic_without_error(self, trial):
        rng = np.random.default_rng(trial)
        H = cgauss(rng, 6, 6)
        p_c = common_precoder(H, 0.3, 100.0)
        for structure in ("cthp", "dthp"):
            f = with_beta(zf_thp_filters(H, structure), 100.0, 0.3)
            generic = per_antenna_common_sinrs(H, p_c, transmit_columns(f), 1.0)
            for i in range(6):
                closed = closed_form_common_sinr(H[i], np.zeros(6), p_c, f, 1.0)
                assert closed == pytest.approx(generic[i], rel=1e-8)

    @pytest.mark.parametrize("structure", ["cthp", "dthp"])
    def test_rate_path_uses_same_columns(self, rng, structure):
        system = SystemConfig(Nt=6, K=3, Nk=2, Etr=100.0, sigma_n2=1.0, mc_channels=1, mc_errors=1, seed=1)
        H = cgauss(rng, 6, 6)
        built = Scheme(design="zf", structure=structure, rate_splitting=True).with_delta(0.3).build(H, system)
        sample = instantaneous_rates(
            assemble(H, np.zeros_like(H)), built.rs, built.filters, [None] * 3, 1.0, system.user_slices(),
        )
        closed = [closed_form_common_sinr(H[i], np.zeros(6), built.rs.p_c, built.filters, 1.0) for i in range(6)]
        assert np.allclose(sample.common_rate_per_antenna, np.log2(1.0 + np.asarray(closed)), rtol=1e-9)

    def test_dthp_own_interference_is_row_of_l(self, rng):
        H = cgauss(rng, 6, 6)
        p_c = common_precoder(H, 0.3, 100.0)
        f = with_beta(zf_thp_filters(H, "dthp"), 100.0, 0.3)
        for i in range(6):
            own = f.beta ** 2 * np.linalg.norm(f.L[i]) ** 2
            expected = abs(H[i] @ p_c) ** 2 / (own + 1.0)
            assert closed_form_common_sinr(H[i], np.zeros(6), p_c, f, 1.0) == pytest.approx(expected, rel=1e-9)

    def test_cthp_explicit_symbol_variance(self, rng):
        H = cgauss(rng, 4, 4)
        p_c = common_precoder(H, 0.5, 100.0)
        f = zf_thp_filters(H, "cthp")  # β = 1
        g = closed_form_common_sinr(H[0], np.zeros(4), p_c, f, 0.5, sigma_v2=1.0)
        assert g == pytest.approx(abs(H[0] @ p_c) ** 2 / (1.0 + 0.5), rel=1e-12)

    def test_error_terms_use_transmit_columns(self, rng):
        H = cgauss(rng, 4, 4)
        h_tilde = 0.3 * cgauss(rng, 1, 4)[0]
        p_c = common_precoder(H, 0.3, 100.0)
        f = with_beta(zf_thp_filters(H, "cthp"), 100.0, 0.3)
        tx = transmit_columns(f)
        own = np.linalg.norm(H[2] @ tx) ** 2
        leak = np.linalg.norm(h_tilde @ tx) ** 2
        expected = abs(H[2] @ p_c) ** 2 / (abs(h_tilde @ p_c) ** 2 + own + leak + 1.0)
        assert closed_form_common_sinr(H[2], h_tilde, p_c, f, 1.0) == pytest.approx(expected, rel=1e-10)

    def test_mmse_rejected(self, rng):
        H = cgauss(rng, 4, 4)
        f = mmse_thp_filters(H, 100.0, 1.0, "dthp")
        with pytest.raises(ConfigError):
            closed_form_common_sinr(H[0], np.zeros(4), np.zeros(4, dtype=complex), f, 1.0)

    @pytest.mark.parametrize("structure", ["cthp", "dthp"])
    def test_mrc_norm_expansion(self, rng, structure):
        H = cgauss(rng, 6, 6)
        f = with_beta(zf_thp_filters(H, structure), 100.0, 0.2)
        Hk = cgauss(rng, 2, 6)
        direct = np.linalg.norm(Hk @ effective_private_columns(f), axis=0) ** 2
        assert np.allclose(mrc_norm_expansion(Hk, f), direct, rtol=1e-9)


class TestAverageRates:
    def test_minmax_not_worse_than_per_antenna(self, small_system):
        H = cgauss(np.random.default_rng(1), 4, 4)
        em = ErrorModel(sigma_e2=0.1)
        none = average_rates(H, Scheme.parse("rs-zf-cthp").with_delta(0.3), small_system, em, 20, np.random.default_rng(9))
        mm = average_rates(H, Scheme.parse("rs-zf-cthp-minmax").with_delta(0.3), small_system, em, 20, np.random.default_rng(9))
        assert np.all(mm.common_per_user >= none.common_per_user)
        assert np.array_equal(mm.private_samples, none.private_samples)

    def test_mmsec_not_worse_than_mrc(self, small_system, monkeypatch):
        monkeypatch.setattr(config, "MMSEC_COVARIANCE", "true")
        H = cgauss(np.random.default_rng(2), 4, 4)
        em = ErrorModel(sigma_e2=0.1)
        mrc = average_rates(H, Scheme.parse("rs-zf-dthp-mrc").with_delta(0.3), small_system, em, 20, np.random.default_rng(4))
        mmse = average_rates(H, Scheme.parse("rs-zf-dthp-mmsec").with_delta(0.3), small_system, em, 20, np.random.default_rng(4))
        assert np.all(mmse.common_samples >= mrc.common_samples - 1e-12)

    def test_non_rs_has_zero_common(self, small_system, rng):
        ar = average_rates(cgauss(rng, 4, 4), Scheme.parse("zf-cthp"), small_system, PERFECT, 2, rng)
        assert not np.any(ar.common_samples)
        assert ar.sum_rate == pytest.approx(ar.private_sum)

    def test_full_common_power(self, small_system, rng):
        ar = average_rates(cgauss(rng, 4, 4), Scheme.parse("rs-zf-dthp-mmsec").with_delta(1.0), small_system, PERFECT, 2, rng)
        assert not np.any(ar.private_samples)
        assert np.all(ar.common_per_user > 0)

    @pytest.mark.parametrize("scheme_id", ["rs-zf-cthp", "rs-zf-dthp-mrc", "rs-mmse-dthp", "zf-dthp"])
    def test_single_error_matches_instantaneous(self, small_system, rng, scheme_id):
        H = cgauss(rng, 4, 4)
        em = ErrorModel(sigma_e2=0.1)
        scheme = Scheme.parse(scheme_id).with_delta(0.3 if scheme_id.startswith("rs-") else 0.0)
        ar = average_rates(H, scheme, small_system, em, 1, np.random.default_rng(11))

        built = scheme.build(H, small_system)
        cs = assemble(H, draw_error(small_system, em, small_system.Etr, np.random.default_rng(11)))
        slices = small_system.user_slices()
        if scheme.combiner == "mrc":
            combs = [build_combiner("mrc", cs.user_block(sl), built.rs.p_c, built.rs.tx_cols, 1.0) for sl in slices]
        else:
            combs = [None] * small_system.K
        sample = instantaneous_rates(cs, built.rs, built.filters, combs, 1.0, slices)
        assert np.allclose(ar.private_samples[0], sample.private_rate_per_stream, rtol=1e-12)
        assert np.allclose(ar.common_samples[0], sample.common_rate_per_user, rtol=1e-12)


class TestErgodicSumRate:
    def test_decomposition(self, small_system):
        rep = ergodic_sum_rate(small_system, Scheme.parse("rs-zf-dthp-mmsec").with_delta(0.2), ErrorModel(sigma_e2=0.05), RngStreams(5))
        assert rep.esr_total == pytest.approx(rep.esr_common + rep.esr_private)
        assert rep.esr_common == pytest.approx(np.min(rep.asr_common_per_user))
        assert rep.n_channels == 3 and rep.n_errors == 3
        assert rep.ci_halfwidth > 0

    def test_independent_of_workers(self, small_system):
        scheme = Scheme.parse("rs-mmse-cthp-minmax-mb2").with_delta(0.1)
        em = ErrorModel(sigma_e2=0.05)
        a = ergodic_sum_rate(small_system, scheme, em, RngStreams(5), workers=1, branch_inner_mc=2)
        b = ergodic_sum_rate(small_system, scheme, em, RngStreams(5), workers=3, branch_inner_mc=2)
        assert np.array_equal(a.channel_common, b.channel_common)
        assert np.array_equal(a.channel_private, b.channel_private)
        assert a.esr_total == b.esr_total

    def test_single_branch_equals_plain(self, small_system):
        em = ErrorModel(sigma_e2=0.05)
        plain = ergodic_sum_rate(small_system, Scheme.parse("zf-cthp"), em, RngStreams(5))
        one = ergodic_sum_rate(small_system, Scheme(design="zf", structure="cthp", branches=1), em, RngStreams(5))
        assert one.esr_total == plain.esr_total

    def test_more_power_more_rate(self):
        em = ErrorModel(sigma_e2=0.0)
        low = SystemConfig(Nt=4, K=2, Nk=2, Etr=10.0, mc_channels=3, mc_errors=1, seed=2)
        high = SystemConfig(Nt=4, K=2, Nk=2, Etr=1000.0, mc_channels=3, mc_errors=1, seed=2)
        s = Scheme.parse("zf-dthp")
        assert ergodic_sum_rate(high, s, em, RngStreams(2)).esr_total > ergodic_sum_rate(low, s, em, RngStreams(2)).esr_total

    @pytest.mark.parametrize(
        "rs_id,base_id",
        [
            ("rs-zf-dthp-mmsec", "zf-dthp"),
            ("rs-zf-cthp-minmax", "zf-cthp"),
            ("rs-mmse-dthp-mrc", "mmse-dthp"),
            ("rs-mmse-cthp", "mmse-cthp"),
            ("rs-zf-mmsec", "zf"),
        ],
    )
    def test_zero_delta_equals_base_scheme(self, small_system, rs_id, base_id):
        em = ErrorModel(sigma_e2=0.05)
        rs = ergodic_sum_rate(small_system, Scheme.parse(rs_id).with_delta(0.0), em, RngStreams(5))
        base = ergodic_sum_rate(small_system, Scheme.parse(base_id), em, RngStreams(5))
        assert rs.esr_common == 0.0
        assert np.array_equal(rs.channel_private, base.channel_private)
        assert rs.esr_total == base.esr_total


class TestResampling:
    def test_degenerate_estimate_is_resampled(self, small_system, monkeypatch):
        calls = {"n": 0}
        original = rates_mod.generate_estimate

        def flaky(system, rng):
            calls["n"] += 1
            H = original(system, rng)
            if calls["n"] == 1:
                H[1] = H[0]
            return H

        monkeypatch.setattr(rates_mod, "generate_estimate", flaky)
        rep = ergodic_sum_rate(small_system, Scheme.parse("zf-cthp"), PERFECT, RngStreams(5))
        assert rep.resamples == 1
        assert np.isfinite(rep.esr_total)

    def test_persistent_failure_raises(self, small_system, monkeypatch):
        monkeypatch.setattr(rates_mod, "generate_estimate", lambda system, rng: np.zeros((system.Nr, system.Nt), dtype=complex))
        with pytest.raises(RankDeficiencyError):
            ergodic_sum_rate(small_system, Scheme.parse("zf-cthp"), PERFECT, RngStreams(5))


class TestInstantaneousRates:
    @staticmethod
    def _precoder(H, delta):
        f = with_beta(zf_thp_filters(H, "dthp"), 100.0, delta)
        rs = RsPrecoder(
            p_c=common_precoder(H, delta, 100.0), delta=delta,
            q_cols=effective_private_columns(f), tx_cols=transmit_columns(f),
        )
        return f, rs

    def test_without_common_stream(self, rng):
        H = cgauss(rng, 4, 4)
        cs = assemble(H, 0.2 * cgauss(rng, 4, 4))
        f, rs = self._precoder(H, 0.0)
        sample = instantaneous_rates(cs, rs, f, [None, None], 1.0, [slice(0, 2), slice(2, 4)])
        assert np.all(sample.common_rate_per_user == 0.0)
        assert np.allclose(sample.private_rate_per_stream, np.log2(1 + private_sinrs(cs, f, rs.q_cols, 1.0, tx_cols=rs.tx_cols)))
        assert sample.delta_used == 0.0

    def test_common_rate_is_worst_antenna(self, rng):
        H = cgauss(rng, 4, 4)
        cs = assemble(H, 0.2 * cgauss(rng, 4, 4))
        f, rs = self._precoder(H, 0.3)
        slices = [slice(0, 2), slice(2, 4)]
        sample = instantaneous_rates(cs, rs, f, [None, None], 1.0, slices)
        for k, sl in enumerate(slices):
            per_antenna = per_antenna_common_sinrs(cs.H_true[sl], rs.p_c, rs.tx_cols, 1.0)
            assert sample.common_rate_per_user[k] == pytest.approx(np.log2(1 + per_antenna).min())
