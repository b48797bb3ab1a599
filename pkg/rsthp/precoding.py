# rsthp/precoding.py
"""
Синтез фильтров THP (ZF/MMSE × cTHP/dTHP), общего прекодера, нормировки beta,
линейного ZF и поиска доли мощности общего потока delta.

Соглашения:
  * канал хранится как Ĥ^T (Nr×Nt);
  * q_cols - эффективные столбцы в домене символов s (β·F·B⁻¹ или β·F·C·B⁻¹),
    по ним считается полезный сигнал приватных потоков;
  * tx_cols - направления, по которым на антенны уходят символы v после
    обратной связи (β·F или β·F·C): излучаемая мощность, утечка через ошибку
    канала и помеха общему потоку.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, List, Optional

import numpy as np
from scipy.linalg import solve_triangular

import config
from rsthp.errors import ConfigError
from rsthp.numerics import RngStreams, lq_decompose, svd

if TYPE_CHECKING:
    from rsthp.channel import ErrorModel, SystemConfig
    from rsthp.schemes import Scheme

logger = logging.getLogger(__name__)

DESIGNS = ("zf", "mmse")
STRUCTURES = ("cthp", "dthp")


@dataclass(frozen=True)
class ThpFilters:
    design: str
    structure: str
    F: np.ndarray   # Nt×Nr, прямой фильтр на антенны (Q^H или Q1^H)
    B: np.ndarray   # Nr×Nr, нижнетреугольная с единичной диагональю
    C: np.ndarray   # Nr×Nr, диагональная
    L: np.ndarray   # нижний множитель LQ (Ľ для MMSE)
    Q: np.ndarray   # Nr×Nt (для MMSE - блок Q1)
    beta: float = 1.0
    Q2: Optional[np.ndarray] = None
    regularizer: float = 0.0

    @property
    def M(self) -> int:
        return self.B.shape[0]

    def l_diag(self) -> np.ndarray:
        return np.diag(self.L).real

    def receiver_gain(self) -> np.ndarray:
        """Диагональное усиление на приёме при идеальном CSIT: β·l_ii (dTHP) или β (cTHP)."""
        if self.structure == "dthp":
            return self.beta * self.l_diag()
        return np.full(self.M, self.beta)


@dataclass(frozen=True)
class RsPrecoder:
    p_c: np.ndarray        # длина Nt, ‖p_c‖² = delta·Etr
    delta: float
    q_cols: np.ndarray     # Nt×M, β внутри
    tx_cols: np.ndarray    # Nt×M, β внутри

    @property
    def transmit_power(self) -> float:
        return float(np.vdot(self.p_c, self.p_c).real + np.linalg.norm(self.tx_cols) ** 2)


def _check_structure(design: str, structure: str) -> None:
    if design not in DESIGNS:
        raise ConfigError(f"Неизвестный тип THP: '{design}'")
    if structure not in STRUCTURES:
        raise ConfigError(f"Неизвестная структура THP: '{structure}'")


def _feedback(L: np.ndarray, structure: str):
    C = np.diag(1.0 / np.diag(L).real)
    B = C @ L if structure == "dthp" else L @ C
    # единичная диагональ точно, без округлений
    B[np.diag_indices_from(B)] = 1.0
    return B, C


# ---------------------------------------------------------------------------
# Фильтры THP
# ---------------------------------------------------------------------------
def zf_thp_filters(H_hat: np.ndarray, structure: str) -> ThpFilters:
    _check_structure("zf", structure)
    lq = lq_decompose(H_hat)
    B, C = _feedback(lq.L, structure)
    return ThpFilters(design="zf", structure=structure, F=lq.Q.conj().T, B=B, C=C, L=lq.L, Q=lq.Q)


def mmse_thp_filters(
    H_hat: np.ndarray,
    Etr: float,
    sigma_n2: float,
    structure: str,
    regularizer_scale: float = 1.0,
) -> ThpFilters:
    """
    MMSE-THP через расширенную матрицу Ȟ = [Ĥ^T, sqrt(Nr·σn²/Etr)·I].
    На антенны уходит первый блок Q1^H (первые Nt строк Q̌^H).
    """
    _check_structure("mmse", structure)
    H_hat = np.asarray(H_hat, dtype=complex)
    Nr, Nt = H_hat.shape
    reg = regularizer_scale * np.sqrt(Nr * sigma_n2 / Etr)
    H_ext = np.hstack([H_hat, reg * np.eye(Nr)])
    lq = lq_decompose(H_ext)
    Q1, Q2 = lq.Q[:, :Nt], lq.Q[:, Nt:]
    B, C = _feedback(lq.L, structure)
    return ThpFilters(
        design="mmse", structure=structure, F=Q1.conj().T, B=B, C=C, L=lq.L, Q=Q1,
        Q2=Q2, regularizer=float(reg),
    )


# ---------------------------------------------------------------------------
# Общий поток и мощность
# ---------------------------------------------------------------------------
def _check_delta(delta: float) -> None:
    if not 0.0 <= delta <= 1.0:
        raise ConfigError(f"delta должна лежать в [0, 1], задано {delta}")


def common_precoder(H_hat: np.ndarray, delta: float, Etr: float) -> np.ndarray:
    """
    p_c = sqrt(delta·Etr)·υ1, υ1 - первый правый сингулярный вектор Ĥ^T.
    Фаза фиксируется так, чтобы максимальная по модулю компонента была вещественной положительной.
    """
    _check_delta(delta)
    H_hat = np.asarray(H_hat, dtype=complex)
    if delta == 0.0:
        return np.zeros(H_hat.shape[1], dtype=complex)
    v1 = svd(H_hat).V[:, 0]
    k = int(np.argmax(np.abs(v1)))
    v1 = v1 * (np.abs(v1[k]) / v1[k])
    return np.sqrt(delta * Etr) * v1 / np.linalg.norm(v1)


def beta_scaling(filters: ThpFilters, Etr: float, delta: float, literal_zf_cthp: Optional[bool] = None) -> float:
    """
    beta = sqrt((Etr - delta·Etr) / знаменатель):
      ZF  dTHP: M;           ZF  cTHP: Σ l_kk^-2 (или Σ l_kk^2 при literal_zf_cthp);
      MMSE dTHP: ‖Q1‖_F²;    MMSE cTHP: ‖Q1^H·Č‖_F².
    delta = 1 даёт beta = 0.
    """
    _check_delta(delta)
    private_power = Etr - delta * Etr
    if private_power <= 0.0:
        return 0.0
    if literal_zf_cthp is None:
        literal_zf_cthp = config.ZF_CTHP_BETA_LITERAL

    l = filters.l_diag()
    if filters.design == "zf":
        if filters.structure == "dthp":
            denom = float(filters.M)
        elif literal_zf_cthp:
            denom = float(np.sum(l ** 2))
        else:
            denom = float(np.sum(l ** -2.0))
    elif filters.structure == "dthp":
        denom = float(np.linalg.norm(filters.Q) ** 2)
    else:
        denom = float(np.linalg.norm(filters.F @ filters.C) ** 2)
    return float(np.sqrt(private_power / denom))


def with_beta(filters: ThpFilters, Etr: float, delta: float) -> ThpFilters:
    return replace(filters, beta=beta_scaling(filters, Etr, delta))


def transmit_columns(filters: ThpFilters) -> np.ndarray:
    """Направления символов v на антеннах: β·F (dTHP) или β·F·C (cTHP)."""
    base = filters.F if filters.structure == "dthp" else filters.F @ filters.C
    return filters.beta * base


def effective_private_columns(filters: ThpFilters) -> np.ndarray:
    """
    Столбец j - отображение символа s_j (вместе с его возмущением d_j) на антенны:
    β·F·B⁻¹ (dTHP) или β·F·C·B⁻¹ (cTHP).
    """
    B_inv = solve_triangular(filters.B, np.eye(filters.M, dtype=complex), lower=True, unit_diagonal=True)
    return transmit_columns(filters) @ B_inv


def zf_linear_precoder(H_hat: np.ndarray, Etr: float, delta: float) -> np.ndarray:
    """
    Линейный ZF: столбцы псевдообратной к Ĥ^T (Q^H·L⁻¹), мощность поровну между потоками,
    в сумме Etr - delta·Etr.
    """
    _check_delta(delta)
    lq = lq_decompose(H_hat)
    M = lq.L.shape[0]
    L_inv = solve_triangular(lq.L, np.eye(M, dtype=complex), lower=True)
    W = lq.Q.conj().T @ L_inv
    per_stream = (Etr - delta * Etr) / M
    return W * (np.sqrt(per_stream) / np.linalg.norm(W, axis=0))[None, :]


# ---------------------------------------------------------------------------
# Поиск delta
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class DeltaSearch:
    delta: float
    grid: np.ndarray
    esr_total: np.ndarray
    esr_common: np.ndarray
    esr_private: np.ndarray


def delta_grid(points: int) -> np.ndarray:
    if points < 2:
        raise ConfigError(f"Сетка delta должна содержать минимум 2 точки, задано {points}")
    return np.linspace(0.0, 1.0, points)


def allocate_common_power(
    scheme: "Scheme",
    system: "SystemConfig",
    error_model: "ErrorModel",
    grid_points: int,
    streams: RngStreams,
    workers: int = 1,
) -> DeltaSearch:
    """
    Перебор delta по равномерной сетке на [0, 1] с общими случайными числами для всех точек.
    Максимум ESR; при равенстве берётся меньшая delta (первый максимум).
    Размеры Monte-Carlo берутся из system (для поиска harness передаёт пилотные).
    """
    from rsthp.rates import ergodic_sum_rate

    grid = delta_grid(grid_points)
    totals: List[float] = []
    commons: List[float] = []
    privates: List[float] = []
    for d in grid:
        rep = ergodic_sum_rate(system, scheme.with_delta(float(d)), error_model, streams, workers=workers)
        totals.append(rep.esr_total)
        commons.append(rep.esr_common)
        privates.append(rep.esr_private)

    totals_a = np.asarray(totals)
    best = int(np.argmax(totals_a))
    logger.info(
        "delta search %s: delta_o=%.3f ESR=%.4f (ESR(0)=%.4f)",
        scheme.scheme_id, grid[best], totals_a[best], totals_a[0],
    )
    return DeltaSearch(
        delta=float(grid[best]), grid=grid, esr_total=totals_a,
        esr_common=np.asarray(commons), esr_private=np.asarray(privates),
    )
