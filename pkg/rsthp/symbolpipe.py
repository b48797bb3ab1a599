# rsthp/symbolpipe.py
"""
Символьный тракт THP с конечным алфавитом: рекурсия обратной связи, модуло-решётка,
масштабирование на приёме и жёсткие решения. Используется для проверки инвариантов
и для измерения излучаемой мощности, потерь мощности и модуло-потерь.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from rsthp.channel import ChannelSet
from rsthp.combining import Combiner
from rsthp.errors import ConfigError, ModulationError
from rsthp.numerics import sample_cgauss
from rsthp.precoding import RsPrecoder, ThpFilters

logger = logging.getLogger(__name__)

_ORDERS = {"qpsk": 4, "16qam": 16}


@dataclass(frozen=True)
class ModuloSpec:
    lam: np.ndarray  # период по каждому потоку

    def __post_init__(self):
        lam = np.atleast_1d(np.asarray(self.lam, dtype=float))
        if np.any(lam <= 0):
            raise ConfigError("Период модуло должен быть > 0")
        object.__setattr__(self, "lam", lam)


@dataclass(frozen=True)
class SymbolFrame:
    s: np.ndarray  # исходные символы (n×M или M)
    v: np.ndarray  # символы после обратной связи
    d: np.ndarray  # возмущение на решётке λ(Z + jZ)


@dataclass(frozen=True)
class DecodeResult:
    private_hat: np.ndarray
    private_errors: np.ndarray               # bool, форма как у s
    common_hat: Optional[np.ndarray] = None  # n×K
    common_errors: Optional[np.ndarray] = None


@dataclass(frozen=True)
class PowerLoss:
    variance_per_stream: np.ndarray  # оценка E|v_i|², т.е. τ⁻¹ по потокам

    @property
    def tau_inv(self) -> float:
        return float(np.mean(self.variance_per_stream))

    @property
    def tau(self) -> float:
        return 1.0 / self.tau_inv


@dataclass(frozen=True)
class LinkReport:
    ser_per_stream: np.ndarray
    ser_boundary: float
    ser_interior: float
    common_ser: Optional[np.ndarray]
    mean_tx_power: float


# ---------------------------------------------------------------------------
# Созвездия и модуло
# ---------------------------------------------------------------------------
def modulation_order(modulation: str) -> int:
    try:
        return _ORDERS[modulation.lower()]
    except KeyError:
        raise ModulationError(f"Модуляция '{modulation}' не поддерживается символьным трактом") from None


def constellation(modulation: str) -> np.ndarray:
    """Квадратная QAM с единичной средней энергией."""
    m_o = modulation_order(modulation)
    side = int(round(np.sqrt(m_o)))
    levels = np.arange(-(side - 1), side, 2, dtype=float)
    pts = (levels[:, None] + 1j * levels[None, :]).ravel()
    return pts / np.sqrt(np.mean(np.abs(pts) ** 2))


def lambda_for(modulation: str, E_k: float = 1.0) -> float:
    """λ = sqrt(6·M_o·E_k / (M_o - 1))."""
    m_o = modulation_order(modulation)
    return float(np.sqrt(6.0 * m_o * E_k / (m_o - 1)))


def modulo_spec(modulation: str, M: int, E_k=1.0) -> ModuloSpec:
    """Периоды по потокам; E_k - скаляр или мощность каждого потока."""
    E = np.broadcast_to(np.asarray(E_k, dtype=float), (M,))
    return ModuloSpec(lam=np.array([lambda_for(modulation, e) for e in E]))


def modulo(v, lam):
    """Поэлементное модуло: вещественная и мнимая части в [-λ/2, λ/2)."""
    v = np.asarray(v, dtype=complex)
    lam = np.asarray(lam, dtype=float)
    re = v.real - lam * np.floor(v.real / lam + 0.5)
    im = v.imag - lam * np.floor(v.imag / lam + 0.5)
    return re + 1j * im


def slice_nearest(z: np.ndarray, points: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    idx = np.argmin(np.abs(z[..., None] - points) ** 2, axis=-1)
    return points[idx]


def random_symbols(modulation: str, shape, rng: np.random.Generator) -> np.ndarray:
    pts = constellation(modulation)
    return pts[rng.integers(len(pts), size=shape)]


# ---------------------------------------------------------------------------
# Передатчик
# ---------------------------------------------------------------------------
def thp_encode(s: np.ndarray, B: np.ndarray, lam) -> SymbolFrame:
    """
    v_1 = s_1; v_i = modulo(s_i - Σ_{j<i} b_ij v_j); d = B·v - s.
    s может быть вектором длины M или массивом кадров n×M.
    """
    s = np.asarray(s, dtype=complex)
    single = s.ndim == 1
    S = np.atleast_2d(s)
    M = S.shape[1]
    B = np.asarray(B, dtype=complex)
    if B.shape != (M, M):
        raise ConfigError(f"Размер B {B.shape} не соответствует числу потоков {M}")
    lam = np.broadcast_to(np.asarray(lam, dtype=float), (M,))

    V = np.zeros_like(S)
    V[:, 0] = S[:, 0]
    for i in range(1, M):
        V[:, i] = modulo(S[:, i] - V[:, :i] @ B[i, :i], lam[i])
    D = V @ B.T - S
    if single:
        return SymbolFrame(s=S[0], v=V[0], d=D[0])
    return SymbolFrame(s=S, v=V, d=D)


def transmit(
    frame: SymbolFrame,
    rs_precoder: RsPrecoder,
    s_c,
    power_scale: float = 1.0,
) -> np.ndarray:
    """
    x = p_c·s_c + Σ_j t_j·v_j, t_j - столбцы tx_cols.
    power_scale - общий множитель приватной части (компенсация потерь мощности),
    общий для всех потоков, чтобы не нарушать предвычитание помех.
    """
    cols = power_scale * rs_precoder.tx_cols
    V = np.atleast_2d(frame.v)
    sc = np.atleast_1d(np.asarray(s_c, dtype=complex))
    X = sc[:, None] * rs_precoder.p_c[None, :] + V @ cols.T
    return X[0] if np.ndim(frame.v) == 1 else X


# ---------------------------------------------------------------------------
# Приёмник
# ---------------------------------------------------------------------------
def receive_decode(
    y: np.ndarray,
    H_true: np.ndarray,
    rs_precoder: RsPrecoder,
    filters: ThpFilters,
    s: np.ndarray,
    s_c: np.ndarray,
    lam,
    points: np.ndarray,
    user_slices: Optional[Sequence[slice]] = None,
    combiners: Optional[Sequence[Optional[Combiner]]] = None,
    power_scale: float = 1.0,
) -> DecodeResult:
    """
    Общий поток: комбайнер пользователя, нормировка на w^H·Hk·p_c, решение.
    Затем идеальный SIC (вычитается переданный s_c) и приватный тракт:
    деление на усиление β·l_ii (dTHP) или β (cTHP), модуло, решение.
    """
    Y = np.atleast_2d(np.asarray(y, dtype=complex))
    S = np.atleast_2d(s)
    SC = np.atleast_1d(np.asarray(s_c, dtype=complex))
    a = H_true @ rs_precoder.p_c

    common_hat = common_err = None
    if np.any(rs_precoder.p_c) and user_slices is not None:
        common_hat = np.zeros((Y.shape[0], len(user_slices)), dtype=complex)
        for k, sl in enumerate(user_slices):
            w = a[sl] if combiners is None or combiners[k] is None else combiners[k].w
            gain = np.vdot(w, a[sl])
            common_hat[:, k] = slice_nearest((Y[:, sl] @ w.conj()) / gain, points)
        common_err = common_hat != SC[:, None]

    Yp = Y - SC[:, None] * a[None, :]
    gain = power_scale * filters.receiver_gain()
    Z = modulo(Yp / gain[None, :], np.broadcast_to(np.asarray(lam, dtype=float), (S.shape[1],)))
    private_hat = slice_nearest(Z, points)
    private_err = np.abs(private_hat - S) > 1e-9
    if np.ndim(s) == 1:
        private_hat, private_err = private_hat[0], private_err[0]
    return DecodeResult(private_hat=private_hat, private_errors=private_err, common_hat=common_hat, common_errors=common_err)


# ---------------------------------------------------------------------------
# Измерения
# ---------------------------------------------------------------------------
def measure_power_loss(filters: ThpFilters, modulation: str, n_frames: int, rng: np.random.Generator) -> PowerLoss:
    """τ̂⁻¹ по потокам: выборочная E|v_i|² при равновероятных символах."""
    if n_frames < 1:
        raise ConfigError("n_frames должно быть >= 1")
    S = random_symbols(modulation, (n_frames, filters.M), rng)
    frame = thp_encode(S, filters.B, lambda_for(modulation))
    return PowerLoss(variance_per_stream=np.mean(np.abs(frame.v) ** 2, axis=0))


def power_compensation(rs_precoder: RsPrecoder, loss: PowerLoss) -> float:
    """Общий множитель, возвращающий приватную мощность к ‖tx_cols‖_F² при E|v_j|² != 1."""
    col_power = np.sum(np.abs(rs_precoder.tx_cols) ** 2, axis=0)
    total = float(np.sum(col_power))
    if total == 0.0:
        return 1.0
    return float(np.sqrt(total / np.sum(col_power * loss.variance_per_stream)))


def boundary_mask(points: np.ndarray) -> np.ndarray:
    """Точки внешнего контура созвездия (по вещественной или мнимой части)."""
    edge = np.max(np.abs(points.real))
    return np.isclose(np.abs(points.real), edge) | np.isclose(np.abs(points.imag), edge)


def simulate_link(
    channel_set: ChannelSet,
    rs_precoder: RsPrecoder,
    filters: ThpFilters,
    modulation: str,
    sigma_n2: float,
    n_frames: int,
    rng: np.random.Generator,
    user_slices: Optional[Sequence[slice]] = None,
    combiners: Optional[Sequence[Optional[Combiner]]] = None,
    compensate_power: bool = False,
) -> LinkReport:
    """
    Полный символьный прогон: кодирование, излучение, канал H^T, шум, декодирование.
    Модуло-потеря - разница SER граничных и внутренних точек созвездия.
    """
    points = constellation(modulation)
    M = filters.M
    lam = modulo_spec(modulation, M).lam

    scale = 1.0
    if compensate_power:
        pilot = measure_power_loss(filters, modulation, max(1000, n_frames // 4), rng)
        scale = power_compensation(rs_precoder, pilot)

    S = random_symbols(modulation, (n_frames, M), rng)
    SC = random_symbols(modulation, (n_frames,), rng)
    frame = thp_encode(S, filters.B, lam)
    X = transmit(frame, rs_precoder, SC, power_scale=scale)
    Y = X @ channel_set.H_true.T + sample_cgauss(n_frames, channel_set.H_true.shape[0], sigma_n2, rng)
    res = receive_decode(Y, channel_set.H_true, rs_precoder, filters, S, SC, lam, points,
                         user_slices=user_slices, combiners=combiners, power_scale=scale)

    errors = res.private_errors
    is_edge = np.isin(S, points[boundary_mask(points)])
    ser_b = float(errors[is_edge].mean()) if np.any(is_edge) else float("nan")
    ser_i = float(errors[~is_edge].mean()) if np.any(~is_edge) else float("nan")
    common_ser = None if res.common_errors is None else res.common_errors.mean(axis=0)
    return LinkReport(
        ser_per_stream=errors.mean(axis=0),
        ser_boundary=ser_b,
        ser_interior=ser_i,
        common_ser=common_ser,
        mean_tx_power=float(np.mean(np.sum(np.abs(X) ** 2, axis=1))),
    )
