# rsthp/numerics.py
"""
Комплексное матричное ядро: LQ и SVD разложения, выборка CN(0, var),
воспроизводимые RNG-подпотоки и счётчик FLOPS для плотных произведений.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from config import FACTOR_TOL, RANK_TOL
from rsthp.errors import NumericError, RankDeficiencyError

logger = logging.getLogger(__name__)

# Ключи подпотоков RNG: (вид, индекс реализации, ...)
STREAM_ESTIMATE = 0
STREAM_ERROR = 1
STREAM_BRANCH = 2
STREAM_PILOT = 3
STREAM_FRAMES = 4


@dataclass(frozen=True)
class LqFactors:
    L: np.ndarray  # m×m, нижнетреугольная, диагональ вещественная >= 0
    Q: np.ndarray  # m×n, ортонормированные строки

    def reconstruct(self) -> np.ndarray:
        return self.L @ self.Q


@dataclass(frozen=True)
class SvdFactors:
    U: np.ndarray
    S: np.ndarray  # по убыванию
    V: np.ndarray  # правые сингулярные векторы по столбцам (не V^H)

    def reconstruct(self) -> np.ndarray:
        m, n = self.U.shape[0], self.V.shape[0]
        sigma = np.zeros((m, n), dtype=complex)
        k = len(self.S)
        sigma[:k, :k] = np.diag(self.S)
        return self.U @ sigma @ self.V.conj().T


# ---------------------------------------------------------------------------
# Разложения
# ---------------------------------------------------------------------------
def lq_decompose(A: np.ndarray) -> LqFactors:
    """
    LQ-разложение A = L·Q для A размера m×n, m <= n.

    Считается через Householder-QR от A^H (LAPACK geqrf): A^H = Q0·R0 => A = R0^H·Q0^H.
    Фазы диагонали L переносятся в строки Q, чтобы диагональ была вещественной и неотрицательной.
    """
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] > A.shape[1]:
        raise NumericError(f"lq_decompose: ожидалась матрица m×n с m <= n, получено {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NumericError("lq_decompose: матрица содержит нечисловые элементы")

    s = np.linalg.svd(A, compute_uv=False)
    if s.size == 0 or s[0] == 0.0 or s[-1] <= RANK_TOL * s[0]:
        raise RankDeficiencyError(
            "Матрица не полного строчного ранга",
            details=f"shape={A.shape}, s_min={s[-1] if s.size else 0.0:.3e}, s_max={s[0] if s.size else 0.0:.3e}",
        )

    Q0, R0 = np.linalg.qr(A.conj().T, mode="reduced")
    L = R0.conj().T
    Q = Q0.conj().T

    d = np.diag(L)
    mag = np.abs(d)
    phase = np.where(mag > 0, d / np.where(mag > 0, mag, 1.0), 1.0)
    L = L * phase.conj()[None, :]
    Q = Q * phase[:, None]

    L = np.tril(L)
    L[np.diag_indices_from(L)] = mag
    return LqFactors(L=L, Q=Q)


def svd(A: np.ndarray) -> SvdFactors:
    A = np.asarray(A, dtype=complex)
    if not np.all(np.isfinite(A)):
        raise NumericError("svd: матрица содержит нечисловые элементы")
    try:
        U, S, Vh = np.linalg.svd(A, full_matrices=True)
    except np.linalg.LinAlgError as e:
        raise NumericError("SVD не сошлось", details=str(e)) from e
    return SvdFactors(U=U, S=S, V=Vh.conj().T)


def check_lq(factors: LqFactors, A: np.ndarray, tol: float = FACTOR_TOL) -> bool:
    """Проверка инвариантов LQ: реконструкция, треугольность, ортонормированность строк."""
    A = np.asarray(A, dtype=complex)
    err = np.linalg.norm(A - factors.reconstruct()) / max(np.linalg.norm(A), 1e-300)
    m = factors.Q.shape[0]
    orth = np.linalg.norm(factors.Q @ factors.Q.conj().T - np.eye(m))
    upper = np.max(np.abs(np.triu(factors.L, 1))) if m > 1 else 0.0
    return bool(err <= tol and orth <= tol and upper <= 1e-12 and np.all(np.diag(factors.L).real >= 0))


# ---------------------------------------------------------------------------
# Случайные величины
# ---------------------------------------------------------------------------
def sample_cgauss(rows: int, cols: int, variance: float, rng: np.random.Generator) -> np.ndarray:
    """Матрица i.i.d. CN(0, variance): вещественная и мнимая части по variance/2."""
    if variance < 0:
        raise ValueError(f"variance должна быть >= 0, получено {variance}")
    std = np.sqrt(variance / 2.0)
    return std * (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols)))


class RngStreams:
    """
    Дерево воспроизводимых подпотоков на SeedSequence.

    Поток определяется только (seed, ключ), поэтому результат не зависит
    от числа потоков исполнения и порядка обхода.
    """

    def __init__(self, seed: int, prefix: Tuple[int, ...] = ()):
        self.seed = int(seed)
        self.prefix = tuple(int(k) for k in prefix)

    def stream(self, *key: int) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.prefix + tuple(int(k) for k in key))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, *key: int) -> "RngStreams":
        return RngStreams(self.seed, self.prefix + tuple(int(k) for k in key))

    def __repr__(self) -> str:
        return f"RngStreams(seed={self.seed}, prefix={self.prefix})"


# ---------------------------------------------------------------------------
# Инструментированное умножение
# ---------------------------------------------------------------------------
class FlopCounter:
    """
    Считает реальные комплексные умножения и сложения плотного произведения.
    Соглашение: умножение = 6 FLOPS, сложение = 2 FLOPS.
    """

    def __init__(self) -> None:
        self.cmul = 0
        self.cadd = 0

    @property
    def flops(self) -> int:
        return 6 * self.cmul + 2 * self.cadd

    def reset(self) -> None:
        self.cmul = 0
        self.cadd = 0

    def matmul(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        A = np.asarray(A, dtype=complex)
        B = np.asarray(B, dtype=complex)
        m, n = A.shape
        n2, p = B.shape
        if n != n2:
            raise ValueError(f"Несогласованные размеры: {A.shape} x {B.shape}")
        out = np.zeros((m, p), dtype=complex)
        for i in range(m):
            for k in range(p):
                prods = A[i, :] * B[:, k]
                self.cmul += n
                acc = prods[0]
                for t in range(1, n):
                    acc = acc + prods[t]
                    self.cadd += 1
                out[i, k] = acc
        return out
