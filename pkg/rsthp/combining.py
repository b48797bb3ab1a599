# rsthp/combining.py
"""Комбайнеры общего потока на стороне приёмника: Min-Max, MRC, MMSEc."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from rsthp.errors import CombinerError, ConfigError

logger = logging.getLogger(__name__)

COMBINERS = ("none", "minmax", "mrc", "mmsec")


@dataclass(frozen=True)
class Combiner:
    kind: str
    w: np.ndarray


def _effective(Hk: np.ndarray, p_c: np.ndarray, tx_cols: np.ndarray):
    a = np.asarray(Hk) @ np.asarray(p_c)
    G = np.asarray(Hk) @ np.asarray(tx_cols) if np.size(tx_cols) else np.zeros((Hk.shape[0], 0), dtype=complex)
    return a, G


def combined_sinr(w: np.ndarray, Hk: np.ndarray, p_c: np.ndarray, tx_cols: np.ndarray, sigma_n2: float) -> float:
    """γ = |w^H Hk p_c|² / (Σ_j |w^H Hk t_j|² + ‖w‖² σn²), t_j - столбцы tx_cols."""
    w = np.asarray(w, dtype=complex)
    w_norm2 = float(np.vdot(w, w).real)
    if w_norm2 == 0.0:
        raise CombinerError("Нулевой вектор комбайнера")
    a, G = _effective(Hk, p_c, tx_cols)
    signal = abs(np.vdot(w, a)) ** 2
    interference = float(np.sum(np.abs(w.conj() @ G) ** 2))
    return float(signal / (interference + w_norm2 * sigma_n2))


def per_antenna_common_sinrs(H: np.ndarray, p_c: np.ndarray, tx_cols: np.ndarray, sigma_n2: float) -> np.ndarray:
    """SINR общего потока на каждой приёмной антенне (комбайнер e_i) для всех строк H сразу."""
    a, G = _effective(H, p_c, tx_cols)
    return np.abs(a) ** 2 / (np.sum(np.abs(G) ** 2, axis=1) + sigma_n2)


def minmax_select(table: Sequence[Sequence[float]]) -> List[int]:
    """
    Для каждого пользователя - индекс антенны с наибольшей эргодической скоростью
    общего потока. При равенстве выбирается меньший индекс.
    Индексы с нуля: номер антенны при счёте с единицы минус один, например
    [[1, 3, 3], [2, 1]] -> [1, 0] (антенны 2 и 1).
    """
    return [int(np.argmax(np.asarray(row, dtype=float))) for row in table]


def minmax_combiner(n_antennas: int, index: int) -> Combiner:
    w = np.zeros(n_antennas, dtype=complex)
    w[index] = 1.0
    return Combiner(kind="minmax", w=w)


def mrc_combiner(Hk: np.ndarray, p_c: np.ndarray) -> Combiner:
    a = np.asarray(Hk) @ np.asarray(p_c)
    n2 = float(np.vdot(a, a).real)
    if n2 == 0.0:
        raise CombinerError("MRC: нулевой эффективный канал общего потока")
    return Combiner(kind="mrc", w=a / n2)


def mmsec_combiner(Hk: np.ndarray, p_c: np.ndarray, tx_cols: np.ndarray, sigma_n2: float) -> Combiner:
    """w = R⁻¹·Hk·p_c, R = aa^H + Σ_j g_j g_j^H + σn²·I (символы единичной дисперсии)."""
    a, G = _effective(Hk, p_c, tx_cols)
    if not np.any(a):
        raise CombinerError("MMSEc: нулевой эффективный канал общего потока")
    R = np.outer(a, a.conj()) + G @ G.conj().T + sigma_n2 * np.eye(a.size)
    return Combiner(kind="mmsec", w=np.linalg.solve(R, a))


def build_combiner(
    kind: str,
    Hk: np.ndarray,
    p_c: np.ndarray,
    tx_cols: np.ndarray,
    sigma_n2: float,
    antenna: int = 0,
) -> Combiner:
    if kind == "minmax":
        return minmax_combiner(Hk.shape[0], antenna)
    if kind == "mrc":
        return mrc_combiner(Hk, p_c)
    if kind == "mmsec":
        return mmsec_combiner(Hk, p_c, tx_cols, sigma_n2)
    raise ConfigError(f"Комбайнер '{kind}' не строится как вектор w")


# ---------------------------------------------------------------------------
# Замкнутые формы SINR
# ---------------------------------------------------------------------------
def mrc_sinr_closed_form(Hk: np.ndarray, p_c: np.ndarray, tx_cols: np.ndarray, sigma_n2: float) -> float:
    """γ_MRC = ‖a‖² / (Σ_j ‖g_j‖² cos²θ_j + σn²), cos²θ_j - между a и g_j."""
    a, G = _effective(Hk, p_c, tx_cols)
    a2 = float(np.vdot(a, a).real)
    g2 = np.sum(np.abs(G) ** 2, axis=0)
    cos2 = np.divide(np.abs(a.conj() @ G) ** 2, a2 * g2, out=np.zeros_like(g2), where=g2 > 0)
    return float(a2 / (np.sum(g2 * cos2) + sigma_n2))


def mmsec_sinr_closed_form(Hk: np.ndarray, p_c: np.ndarray, tx_cols: np.ndarray, sigma_n2: float) -> float:
    """
    SINR с w = R⁻¹a в развёрнутом виде:
    |a^H R⁻¹ a|² / (Σ_j |a^H R⁻¹ g_j|² + σn²·tr(R⁻¹ a a^H R⁻¹)).
    """
    a, G = _effective(Hk, p_c, tx_cols)
    R = np.outer(a, a.conj()) + G @ G.conj().T + sigma_n2 * np.eye(a.size)
    R_inv = np.linalg.inv(R)
    num = abs(a.conj() @ R_inv @ a) ** 2
    leak = float(np.sum(np.abs(a.conj() @ R_inv @ G) ** 2))
    noise = sigma_n2 * float(np.trace(R_inv @ np.outer(a, a.conj()) @ R_inv).real)
    return float(num / (leak + noise))
