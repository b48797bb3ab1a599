# rsthp/rates.py
"""
Скорости: мгновенные (одна реализация ошибки), средние по ошибкам при фиксированной
оценке (ASR) и эргодические по оценкам (ESR = min_k R̄c,k + R̄p).
Все скорости считаются для гауссовских входов единичной дисперсии.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import norm
from tenacity import Retrying, retry_if_exception, stop_after_attempt

import config
from rsthp.channel import ChannelSet, ErrorModel, SystemConfig, assemble, draw_error, generate_estimate, permute_rows
from rsthp.combining import Combiner, build_combiner, combined_sinr, minmax_select, per_antenna_common_sinrs
from rsthp.errors import CombinerError, ConfigError
from rsthp.numerics import STREAM_BRANCH, STREAM_ERROR, STREAM_ESTIMATE, RngStreams
from rsthp.precoding import RsPrecoder, ThpFilters, transmit_columns
from rsthp.schemes import BuiltPrecoder, Scheme

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RateSample:
    common_rate_per_user: np.ndarray
    private_rate_per_stream: np.ndarray
    delta_used: float
    common_rate_per_antenna: Optional[np.ndarray] = None  # Nr, при приёме без комбайнера


@dataclass(frozen=True)
class AverageRates:
    """Выборки по реализациям ошибки при одной оценке канала."""
    common_samples: np.ndarray    # n_err×K
    private_samples: np.ndarray   # n_err×M
    delta_used: float
    antenna_choice: Optional[List[int]] = None

    @property
    def common_per_user(self) -> np.ndarray:
        return self.common_samples.mean(axis=0)

    @property
    def private_per_stream(self) -> np.ndarray:
        return self.private_samples.mean(axis=0)

    @property
    def private_sum(self) -> float:
        return float(self.private_samples.sum(axis=1).mean())

    @property
    def sum_rate(self) -> float:
        """Критерий выбора ветви: min_k R̄c,k + R̄p."""
        return float(np.min(self.common_per_user) + self.private_sum)


@dataclass(frozen=True)
class RateReport:
    scheme_id: str
    delta_used: float
    asr_common_per_user: np.ndarray
    asr_private: float
    esr_common: float
    esr_private: float
    esr_total: float
    ci_halfwidth: float
    n_channels: int
    n_errors: int
    resamples: int = 0
    channel_common: np.ndarray = field(default=None, repr=False)
    channel_private: np.ndarray = field(default=None, repr=False)


# ---------------------------------------------------------------------------
# SINR и мгновенные скорости
# ---------------------------------------------------------------------------
def private_sinrs(
    channel_set: ChannelSet,
    filters: Optional[ThpFilters],
    q_cols: np.ndarray,
    sigma_n2: float,
    tx_cols: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    Полезный сигнал и остаточная помеха считаются по оценке: E = Ĥ^T·[q_1 … q_M]
    (домен символов s, возмущение d снимается модуло на приёме). Ошибка канала
    действует на переданные символы v (E[vv^H] = I) по направлениям tx_cols:
        γ_i = |E_ii|² / (Σ_{j≠i} |E_ij|² + Σ_j |[H̃^T·T]_ij|² + σn²).
    Для линейного прекодера tx_cols = q_cols. Общий поток считается снятым SIC.
    """
    if tx_cols is None:
        tx_cols = transmit_columns(filters) if filters is not None else q_cols
    E = channel_set.H_hat @ q_cols
    if E.shape[0] != E.shape[1]:
        raise ConfigError(f"Ожидалась квадратная эффективная матрица, получено {E.shape}")
    if filters is not None and filters.M != E.shape[1]:
        raise ConfigError(f"Число столбцов {E.shape[1]} не совпадает с размером фильтров {filters.M}")
    power = np.abs(E) ** 2
    signal = np.diag(power)
    residual = power.sum(axis=1) - signal
    leakage = np.sum(np.abs(channel_set.H_tilde @ tx_cols) ** 2, axis=1)
    return signal / (residual + leakage + sigma_n2)


def instantaneous_rates(
    channel_set: ChannelSet,
    rs_precoder: RsPrecoder,
    filters: Optional[ThpFilters],
    combiners: Sequence[Optional[Combiner]],
    sigma_n2: float,
    user_slices: Sequence[slice],
) -> RateSample:
    """
    Скорости одной реализации. Приватные символы мешают общему потоку по
    направлениям tx_cols. combiners[k] = None означает приём общего потока
    каждой антенной отдельно (скорость пользователя - минимум по его антеннам).
    """
    p_c, cols = rs_precoder.p_c, rs_precoder.tx_cols
    common = np.zeros(len(user_slices))
    per_antenna: Optional[np.ndarray] = None
    if np.any(p_c):
        H = channel_set.H_true
        if any(c is None for c in combiners):
            per_antenna = np.log2(1.0 + per_antenna_common_sinrs(H, p_c, cols, sigma_n2))
        for k, sl in enumerate(user_slices):
            if combiners[k] is None:
                common[k] = per_antenna[sl].min()
            else:
                common[k] = np.log2(1.0 + combined_sinr(combiners[k].w, H[sl, :], p_c, cols, sigma_n2))
    private = np.log2(1.0 + private_sinrs(channel_set, filters, rs_precoder.q_cols, sigma_n2, tx_cols=cols))
    return RateSample(
        common_rate_per_user=common,
        private_rate_per_stream=private,
        delta_used=rs_precoder.delta,
        common_rate_per_antenna=per_antenna,
    )


def _vector_combiners(
    scheme: Scheme,
    channel_set: ChannelSet,
    rs: RsPrecoder,
    sigma_n2: float,
    user_slices: Sequence[slice],
) -> List[Optional[Combiner]]:
    """MRC/MMSEc для каждой реализации; при нулевом эффективном канале - None (поантенные SINR тогда тоже нулевые)."""
    covariance = "hat" if config.MMSEC_COVARIANCE == "estimate" else "true"
    out: List[Optional[Combiner]] = []
    for sl in user_slices:
        src = covariance if scheme.combiner == "mmsec" else "true"
        try:
            out.append(build_combiner(scheme.combiner, channel_set.user_block(sl, src), rs.p_c, rs.tx_cols, sigma_n2))
        except CombinerError:
            out.append(None)
    return out


# ---------------------------------------------------------------------------
# ASR: среднее по ошибкам при фиксированной оценке
# ---------------------------------------------------------------------------
def average_rates(
    H_hat: np.ndarray,
    scheme: Scheme,
    system: SystemConfig,
    error_model: ErrorModel,
    n_err: int,
    rng: np.random.Generator,
    order: Optional[Sequence[int]] = None,
) -> AverageRates:
    """
    Прекодер строится один раз по Ĥ (переставленной по order, если задан),
    затем n_err реализаций ошибки; ошибка переставляется той же перестановкой.
    """
    if n_err < 1:
        raise ConfigError(f"n_err должно быть >= 1, задано {n_err}")
    H_b = permute_rows(H_hat, order) if order is not None else np.asarray(H_hat, dtype=complex)
    built = scheme.build(H_b, system)
    return _average_for_built(H_b, built, scheme, system, error_model, n_err, rng, order)


def _average_for_built(
    H_b: np.ndarray,
    built: BuiltPrecoder,
    scheme: Scheme,
    system: SystemConfig,
    error_model: ErrorModel,
    n_err: int,
    rng: np.random.Generator,
    order: Optional[Sequence[int]],
) -> AverageRates:
    rs, filters = built.rs, built.filters
    slices = system.user_slices()
    sigma_n2 = system.sigma_n2
    has_common = scheme.rate_splitting and bool(np.any(rs.p_c))
    per_antenna_mode = scheme.combiner in ("none", "minmax")

    common = np.zeros((n_err, system.K))
    private = np.zeros((n_err, rs.q_cols.shape[1]))
    per_ant = np.zeros((n_err, system.Nr))

    no_combiners: List[Optional[Combiner]] = [None] * system.K
    for e in range(n_err):
        H_tilde = draw_error(system, error_model, system.Etr, rng)
        if order is not None:
            H_tilde = permute_rows(H_tilde, order)
        cs = assemble(H_b, H_tilde)
        vector_mode = has_common and not per_antenna_mode
        combs = _vector_combiners(scheme, cs, rs, sigma_n2, slices) if vector_mode else no_combiners
        sample = instantaneous_rates(cs, rs, filters, combs, sigma_n2, slices)
        private[e] = sample.private_rate_per_stream
        if not has_common:
            continue
        if per_antenna_mode:
            per_ant[e] = sample.common_rate_per_antenna
        else:
            common[e] = sample.common_rate_per_user

    choice: Optional[List[int]] = None
    if has_common and per_antenna_mode:
        table = [per_ant[:, sl].mean(axis=0) for sl in slices]
        if scheme.combiner == "minmax":
            choice = minmax_select(table)
        else:
            # без комбайнера каждая антенна декодирует сама - ограничивает худшая
            choice = [int(np.argmin(row)) for row in table]
        for k, sl in enumerate(slices):
            common[:, k] = per_ant[:, sl][:, choice[k]]

    return AverageRates(common_samples=common, private_samples=private, delta_used=rs.delta, antenna_choice=choice)


# ---------------------------------------------------------------------------
# ESR: среднее по оценкам канала
# ---------------------------------------------------------------------------
def _is_retryable(exc: BaseException) -> bool:
    return bool(getattr(exc, "is_retryable", False))


def _channel_realization(
    c: int,
    system: SystemConfig,
    scheme: Scheme,
    error_model: ErrorModel,
    streams: RngStreams,
    branch_inner_mc: int,
) -> Tuple[AverageRates, int]:
    """ASR одной оценки канала; вырожденные реализации пересэмплируются с новым подпотоком."""
    result: Optional[AverageRates] = None
    resamples = 0
    for attempt in Retrying(
        stop=stop_after_attempt(config.RANK_RESAMPLE_ATTEMPTS),
        retry=retry_if_exception(_is_retryable),
        reraise=True,
    ):
        with attempt:
            n = attempt.retry_state.attempt_number - 1
            resamples = n
            H_hat = generate_estimate(system, streams.stream(STREAM_ESTIMATE, c, n))
            order = None
            if scheme.branches > 1:
                from rsthp.multibranch import branch_patterns, select_branch

                patterns = branch_patterns(system.K, system.Nk, scheme.branches)
                selection = select_branch(
                    H_hat, patterns, scheme, system, error_model, branch_inner_mc,
                    streams.child(STREAM_BRANCH, c, n),
                )
                order = selection.pattern.order
            result = average_rates(
                H_hat, scheme, system, error_model, system.mc_errors,
                streams.stream(STREAM_ERROR, c, n), order=order,
            )
    if resamples:
        logger.warning("Реализация канала %d: %d пересэмплирований (вырожденная оценка)", c, resamples)
    return result, resamples


def ergodic_sum_rate(
    system: SystemConfig,
    scheme: Scheme,
    error_model: ErrorModel,
    streams: RngStreams,
    workers: int = 1,
    branch_inner_mc: Optional[int] = None,
) -> RateReport:
    """
    ESR = min_k (среднее по оценкам R̄c,k) + среднее R̄p.
    Результаты собираются в порядке индексов - итог не зависит от workers.
    """
    system.validate()
    error_model.validate()
    scheme.validate_for(system)
    inner = branch_inner_mc or config.BRANCH_INNER_MC

    def one(c: int):
        return _channel_realization(c, system, scheme, error_model, streams, inner)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, range(system.mc_channels)))
    else:
        results = [one(c) for c in range(system.mc_channels)]

    per_channel = [r for r, _ in results]
    resamples = sum(n for _, n in results)

    channel_common = np.array([ar.common_per_user for ar in per_channel])
    channel_private = np.array([ar.private_sum for ar in per_channel])
    asr_common = channel_common.mean(axis=0)
    esr_common = float(np.min(asr_common))
    esr_private = float(channel_private.mean())

    worst = int(np.argmin(asr_common))
    samples = np.concatenate([ar.common_samples[:, worst] + ar.private_samples.sum(axis=1) for ar in per_channel])
    ci = 0.0
    if samples.size > 1:
        z = float(norm.ppf(0.5 + config.CI_LEVEL / 2.0))
        ci = z * float(np.std(samples, ddof=1)) / np.sqrt(samples.size)

    report = RateReport(
        scheme_id=scheme.scheme_id,
        delta_used=scheme.delta,
        asr_common_per_user=asr_common,
        asr_private=esr_private,
        esr_common=esr_common,
        esr_private=esr_private,
        esr_total=esr_common + esr_private,
        ci_halfwidth=ci,
        n_channels=system.mc_channels,
        n_errors=system.mc_errors,
        resamples=resamples,
        channel_common=channel_common,
        channel_private=channel_private,
    )
    logger.debug(
        "ESR %s (Etr=%g, delta=%.3f): %.4f = %.4f + %.4f",
        scheme.scheme_id, system.Etr, scheme.delta, report.esr_total, esr_common, esr_private,
    )
    return report


# ---------------------------------------------------------------------------
# Замкнутые формы для ZF-THP
# ---------------------------------------------------------------------------
def closed_form_common_sinr(
    h_hat_i: np.ndarray,
    h_tilde_i: np.ndarray,
    p_c: np.ndarray,
    filters: ThpFilters,
    sigma_n2: float,
    sigma_v2: Optional[float] = None,
) -> float:
    """
    SINR общего потока на одной антенне для ZF-THP; ошибка канала отнесена к помехе,
    перекрёстные слагаемые ĥ/h̃ усреднены (H̃ с нулевым средним):
      cTHP: |ĥp|² / (|h̃p|² + β²σv² + β² Σ_j l_jj⁻² |h̃·q_j*^H|² + σn²)
      dTHP: |ĥp|² / (|h̃p|² + β²‖строка i матрицы L‖² + β² Σ_j |h̃·q_j*^H|² + σn²)
    Символы v единичной дисперсии. Для cTHP без явного sigma_v2 берётся дисперсия
    s_i + d_i, т.е. ‖строка i матрицы B‖², и при H̃ = 0 формула совпадает с
    per_antenna_common_sinrs по столбцам tx_cols.
    """
    if filters.design != "zf":
        raise ConfigError("Замкнутая форма SINR определена только для ZF-THP")
    h_hat_i = np.asarray(h_hat_i, dtype=complex)
    h_tilde_i = np.asarray(h_tilde_i, dtype=complex)
    tx = transmit_columns(filters)
    num = abs(h_hat_i @ p_c) ** 2
    err_common = abs(h_tilde_i @ p_c) ** 2
    leak = float(np.linalg.norm(h_tilde_i @ tx) ** 2)
    if filters.structure == "cthp" and sigma_v2 is not None:
        own = filters.beta ** 2 * sigma_v2
    else:
        own = float(np.linalg.norm(h_hat_i @ tx) ** 2)
    return float(num / (err_common + own + leak + sigma_n2))


def mrc_norm_expansion(Hk: np.ndarray, filters: ThpFilters) -> np.ndarray:
    """
    ‖Hk·q_i‖² через поэлементную сумму
    Σ_p |Σ_n Σ_j (1/l_jj) h_pn conj(Q_jn) [B⁻¹]_ji|² (cTHP; для dTHP без 1/l_jj).
    """
    Hk = np.asarray(Hk, dtype=complex)
    B_inv = np.linalg.inv(filters.B)
    scale = 1.0 / filters.l_diag() if filters.structure == "cthp" else np.ones(filters.M)
    T = np.einsum("pn,jn,j,ji->pi", Hk, filters.Q.conj(), scale, B_inv)
    return filters.beta ** 2 * np.sum(np.abs(T) ** 2, axis=0)
