# rsthp/channel.py
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from rsthp.errors import ConfigError, ShapeError
from rsthp.numerics import sample_cgauss

logger = logging.getLogger(__name__)

MODULATIONS = ("gaussian", "qpsk", "16qam")


@dataclass(frozen=True)
class SystemConfig:
    """
    Параметры системы. Канал хранится в транспонированной форме H^T (Nr×Nt),
    строки сгруппированы блоками по пользователям.
    """
    Nt: int
    K: int
    Nk: Tuple[int, ...]
    Etr: float
    sigma_n2: float = 1.0
    M: Optional[int] = None
    modulation: str = "gaussian"
    mc_channels: int = 100
    mc_errors: int = 100
    seed: int = 1

    def __post_init__(self):
        nk = (self.Nk,) * self.K if isinstance(self.Nk, int) else tuple(int(x) for x in self.Nk)
        object.__setattr__(self, "Nk", nk)
        if self.M is None:
            object.__setattr__(self, "M", sum(nk))
        object.__setattr__(self, "modulation", str(self.modulation).lower())

    @property
    def Nr(self) -> int:
        return sum(self.Nk)

    def user_slices(self) -> List[slice]:
        out, start = [], 0
        for n in self.Nk:
            out.append(slice(start, start + n))
            start += n
        return out

    def validate(self) -> None:
        errors = []
        if self.K < 1:
            errors.append(f"K должно быть >= 1, задано {self.K}")
        if len(self.Nk) != self.K:
            errors.append(f"Nk содержит {len(self.Nk)} значений при K={self.K}")
        if any(n < 1 for n in self.Nk):
            errors.append("Каждому пользователю нужна минимум одна антенна")
        if self.M > self.Nr:
            errors.append(f"M={self.M} больше Nr={self.Nr}")
        if self.Nt < self.Nr:
            errors.append(f"Nt={self.Nt} меньше Nr={self.Nr}")
        if not self.Etr > 0:
            errors.append(f"Etr должна быть > 0, задано {self.Etr}")
        if not self.sigma_n2 > 0:
            errors.append(f"sigma_n2 должна быть > 0, задано {self.sigma_n2}")
        if self.modulation not in MODULATIONS:
            errors.append(f"Неизвестная модуляция '{self.modulation}', доступны: {', '.join(MODULATIONS)}")
        if self.mc_channels < 1 or self.mc_errors < 1:
            errors.append(f"Размеры Monte-Carlo должны быть >= 1 ({self.mc_channels}x{self.mc_errors})")
        if errors:
            raise ConfigError("Некорректная конфигурация системы:\n- " + "\n- ".join(errors))


@dataclass(frozen=True)
class ErrorModel:
    """Модель ошибки CSIT: фиксированная дисперсия на элемент или sigma_e2 = scale·Etr^(-alpha)."""
    mode: str = "fixed"
    sigma_e2: float = 0.0
    scale: float = 0.95
    alpha: float = 0.6

    def variance(self, Etr: float) -> float:
        if self.mode == "fixed":
            return float(self.sigma_e2)
        return float(self.scale * Etr ** (-self.alpha))

    def validate(self) -> None:
        if self.mode not in ("fixed", "snr_scaled"):
            raise ConfigError(f"Неизвестный режим ошибки CSIT: '{self.mode}'")
        if self.sigma_e2 < 0:
            raise ConfigError(f"sigma_e2 должна быть >= 0, задано {self.sigma_e2}")
        if self.mode == "snr_scaled" and (not 0.0 <= self.alpha <= 1.0 or self.scale < 0):
            raise ConfigError(f"Для snr_scaled нужно alpha в [0,1] и scale >= 0 (alpha={self.alpha}, scale={self.scale})")


@dataclass(frozen=True)
class ChannelSet:
    H_hat: np.ndarray
    H_tilde: np.ndarray
    H_true: np.ndarray = field(repr=False)

    def user_block(self, sl: slice, which: str = "true") -> np.ndarray:
        src = {"true": self.H_true, "hat": self.H_hat, "tilde": self.H_tilde}[which]
        return src[sl, :]


def generate_estimate(config: SystemConfig, rng: np.random.Generator) -> np.ndarray:
    """Оценка канала Ĥ^T: Nr×Nt, элементы CN(0,1)."""
    return sample_cgauss(config.Nr, config.Nt, 1.0, rng)


def draw_error(config: SystemConfig, error_model: ErrorModel, Etr: float, rng: np.random.Generator) -> np.ndarray:
    """Ошибка CSIT H̃^T с дисперсией на элемент по модели ошибки."""
    return sample_cgauss(config.Nr, config.Nt, error_model.variance(Etr), rng)


def assemble(H_hat: np.ndarray, H_tilde: np.ndarray) -> ChannelSet:
    H_hat = np.asarray(H_hat, dtype=complex)
    H_tilde = np.asarray(H_tilde, dtype=complex)
    if H_hat.shape != H_tilde.shape:
        raise ShapeError(f"Размеры оценки и ошибки не совпадают: {H_hat.shape} vs {H_tilde.shape}")
    return ChannelSet(H_hat=H_hat, H_tilde=H_tilde, H_true=H_hat + H_tilde)


def permute_rows(H: np.ndarray, order: Sequence[int]) -> np.ndarray:
    """Переставляет строки (антенны/потоки) H^T: результат[r] = H[order[r]]."""
    return np.asarray(H)[np.asarray(order, dtype=int), :]
