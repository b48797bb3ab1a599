# rsthp/multibranch.py
"""
Multi-branch THP: набор перестановок порядка символов, хранимый на передатчике
и приёмниках, и выбор ветви по критерию min_k R̄c,k + R̄p.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import block_diag

from rsthp.channel import ErrorModel, SystemConfig, permute_rows
from rsthp.errors import ConfigError, UnsupportedConfigurationError
from rsthp.numerics import RngStreams
from rsthp.rates import average_rates
from rsthp.schemes import Scheme

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Pattern:
    T: np.ndarray          # перестановочная матрица Nr×Nr
    branch_index: int      # с единицы, 1 - тождественная
    user_pattern: int = 1
    stream_pattern: int = 1

    @property
    def order(self) -> np.ndarray:
        """(T·X)[r] = X[order[r]]."""
        return np.argmax(self.T, axis=1)

    def apply(self, H: np.ndarray) -> np.ndarray:
        return permute_rows(H, self.order)


@dataclass(frozen=True)
class BranchSelection:
    pattern: Pattern
    H_hat: np.ndarray          # переставленная оценка
    scores: Tuple[float, ...]  # критерий по всем ветвям


def _reversal(n: int) -> np.ndarray:
    return np.fliplr(np.eye(n, dtype=int))


def _ordering_patterns(n: int) -> List[np.ndarray]:
    """T_1 = I_n; T_i = blockdiag(I_{i-2}, обратная единичная порядка n-i+2), 2 <= i <= n."""
    out = [np.eye(n, dtype=int)]
    for i in range(2, n + 1):
        if i == 2:
            out.append(_reversal(n))
        else:
            out.append(block_diag(np.eye(i - 2, dtype=int), _reversal(n - i + 2)).astype(int))
    return out


def user_patterns(K: int) -> List[np.ndarray]:
    if K < 1:
        raise ConfigError(f"K должно быть >= 1, задано {K}")
    return _ordering_patterns(K)


def stream_patterns(Nk: int) -> List[np.ndarray]:
    if Nk < 1:
        raise ConfigError(f"Nk должно быть >= 1, задано {Nk}")
    return _ordering_patterns(Nk)


def is_permutation(T: np.ndarray) -> bool:
    T = np.asarray(T)
    return bool(
        T.ndim == 2 and T.shape[0] == T.shape[1]
        and np.all((T == 0) | (T == 1))
        and np.all(T.sum(axis=0) == 1) and np.all(T.sum(axis=1) == 1)
    )


def is_user_block_preserving(T: np.ndarray, Nk: int) -> bool:
    """Каждый блок из Nk строк берёт строки ровно одного пользователя."""
    order = np.argmax(np.asarray(T), axis=1)
    for b in range(len(order) // Nk):
        owners = set(order[b * Nk:(b + 1) * Nk] // Nk)
        if len(owners) != 1:
            return False
    return True


def branch_patterns(K: int, Nk: Union[int, Sequence[int]], L_o: int) -> List[Pattern]:
    """
    Первые L_o перестановок T = T_u,i ⊗ T_s,j, сетка (i, j) по строкам, (1, 1) первая.
    """
    if not isinstance(Nk, int):
        values = set(int(n) for n in Nk)
        if len(values) != 1:
            raise UnsupportedConfigurationError("Multi-branch требует одинакового Nk у всех пользователей")
        Nk = values.pop()
    total = K * Nk
    if not 1 <= L_o <= total:
        raise ConfigError(f"L_o должно лежать в [1, {total}], задано {L_o}")

    out: List[Pattern] = []
    for i, Tu in enumerate(user_patterns(K), start=1):
        for j, Ts in enumerate(stream_patterns(Nk), start=1):
            if len(out) == L_o:
                return out
            out.append(Pattern(T=np.kron(Tu, Ts), branch_index=len(out) + 1, user_pattern=i, stream_pattern=j))
    return out


def select_branch(
    H_hat: np.ndarray,
    patterns: Sequence[Pattern],
    scheme: Scheme,
    system: SystemConfig,
    error_model: ErrorModel,
    inner_mc: int,
    streams: RngStreams,
) -> BranchSelection:
    """
    Для каждой ветви фильтры и общий прекодер строятся заново по T·Ĥ^T и
    оценивается критерий на одних и тех же реализациях ошибки.
    При идеальном CSIT достаточно одной реализации (мгновенные скорости).
    """
    if not patterns:
        raise ConfigError("Пустой набор ветвей")
    n_err = 1 if error_model.variance(system.Etr) == 0.0 else inner_mc

    scores: List[float] = []
    for p in patterns:
        ar = average_rates(H_hat, scheme, system, error_model, n_err, streams.stream(0), order=p.order)
        scores.append(ar.sum_rate)

    best = int(np.argmax(scores))
    chosen = patterns[best]
    logger.debug("Выбрана ветвь %d из %d (критерий %.4f)", chosen.branch_index, len(patterns), scores[best])
    return BranchSelection(pattern=chosen, H_hat=chosen.apply(H_hat), scores=tuple(scores))
