# rsthp/flops.py
"""
Модель вычислительной сложности (FLOPS) для Nt = Nr = n.
Соглашение: комплексное умножение = 6 FLOPS, комплексное сложение = 2 FLOPS.
Все значения - точные рациональные числа (Fraction).
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Sequence, Tuple

from rsthp.errors import ConfigError

FLOPS_SCHEMES: Tuple[str, ...] = (
    "zf-thp",
    "rs-zf-thp-minmax",
    "rs-zf-thp-mrc",
    "rs-zf-thp-mmsec",
    "mmse-thp",
    "rs-mmse-thp-minmax",
    "rs-mmse-thp-mrc",
    "rs-mmse-thp-mmsec",
)


@dataclass(frozen=True)
class FlopsModel:
    scheme: str
    n: int
    K: int

    def validate(self) -> None:
        if self.scheme not in FLOPS_SCHEMES:
            raise ConfigError(f"Неизвестная схема для FLOPS: '{self.scheme}'. Доступны: {', '.join(FLOPS_SCHEMES)}")
        if not self.n >= self.K >= 1:
            raise ConfigError(f"Нужно n >= K >= 1 (n={self.n}, K={self.K})")


def flops_matmul(m: int, n: int, p: int) -> int:
    """Произведение (m×n)·(n×p): 8mnp - 2mp."""
    if min(m, n, p) < 1:
        raise ConfigError(f"Размеры должны быть положительными: ({m}, {n}, {p})")
    return 8 * m * n * p - 2 * m * p


def flops_lq(m: int, n: int) -> Fraction:
    """Householder LQ матрицы m×n: 8m²(n - m/3)."""
    if not 1 <= m <= n:
        raise ConfigError(f"LQ требует 1 <= m <= n, получено ({m}, {n})")
    return Fraction(8 * m * m) * (n - Fraction(m, 3))


def flops_combiner(kind: str, n: int, K: int) -> Fraction:
    n_, K_ = Fraction(n), Fraction(K)
    if kind == "minmax":
        return 8 * n_ - 2 * K_
    if kind == "mrc":
        return 8 * n_ ** 2 + 6 * n_ + 6 * K_
    if kind == "mmsec":
        return Fraction(4) / (3 * K_ ** 2) * n_ ** 3 + 8 / K_ * n_ ** 2 + 8 * n_ ** 2 + 4 * n_ - 2 * K_
    raise ConfigError(f"Неизвестный комбайнер: '{kind}'")


def rs_overhead(n: int) -> Fraction:
    """Общий поток поверх THP без комбайнера: прекодер p_c и его вклад в сигнал."""
    n_ = Fraction(n)
    return 8 * n_ ** 2 + 6 * n_


def zf_thp_steps(n: int) -> List[Tuple[str, Fraction]]:
    """Пошаговая сложность ZF-THP."""
    n_ = Fraction(n)
    return [
        ("lq", Fraction(16, 3) * n_ ** 3),
        ("scaling", n_ ** 2),
        ("feedback", 4 * n_ ** 2 + 4 * n_ - 8),
        ("feedforward", 8 * n_ ** 2 + 4 * n_),
    ]


def flops_scheme(model: FlopsModel) -> Fraction:
    model.validate()
    n, K = Fraction(model.n), Fraction(model.K)
    tokens = model.scheme.split("-")
    # расширенная LQ для MMSE-THP; "mmsec" - комбайнер, а не тип прекодера
    cube = Fraction(40, 3) if "mmse" in tokens else Fraction(16, 3)
    name = "-".join("zf" if t == "mmse" else t for t in tokens)

    if name == "zf-thp":
        return cube * n ** 3 + 13 * n ** 2 + 8 * n - 8
    if name == "rs-zf-thp-minmax":
        return cube * n ** 3 + 21 * n ** 2 + 22 * n - 2 * K - 8
    if name == "rs-zf-thp-mrc":
        return cube * n ** 3 + 29 * n ** 2 + 20 * n + 6 * K - 8
    # rs-zf-thp-mmsec
    return (cube * n ** 3 + Fraction(4) / (3 * K ** 2) * n ** 3 + 29 * n ** 2
            + 8 / K * n ** 2 + 34 * n - 2 * K - 8)


def flops_table(n_values: Sequence[int], K: int, schemes: Sequence[str] = FLOPS_SCHEMES) -> List[Dict[str, object]]:
    """FLOPS от n для всех схем (данные для графика)."""
    rows: List[Dict[str, object]] = []
    for n in n_values:
        row: Dict[str, object] = {"n": n, "K": K}
        for s in schemes:
            row[s] = float(flops_scheme(FlopsModel(scheme=s, n=n, K=K)))
        rows.append(row)
    return rows
