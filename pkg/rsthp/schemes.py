# rsthp/schemes.py
"""
Реестр схем передачи. Идентификатор схемы:

    [rs-]{zf|mmse}[-{cthp|dthp}][-{none|minmax|mrc|mmsec}][-mb<L>]

"zf" без структуры - линейный ZF. Комбайнер допустим только с rs-.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from rsthp.channel import SystemConfig
from rsthp.combining import COMBINERS
from rsthp.errors import ConfigError, UnsupportedConfigurationError
from rsthp.precoding import (
    DESIGNS,
    STRUCTURES,
    RsPrecoder,
    ThpFilters,
    common_precoder,
    effective_private_columns,
    mmse_thp_filters,
    transmit_columns,
    with_beta,
    zf_linear_precoder,
    zf_thp_filters,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BuiltPrecoder:
    rs: RsPrecoder
    filters: Optional[ThpFilters]


@dataclass(frozen=True)
class Scheme:
    design: str = "zf"
    structure: Optional[str] = None   # None - линейный прекодер
    rate_splitting: bool = False
    combiner: str = "none"
    branches: int = 1
    delta: float = 0.0

    # ---------------------------------------------------------------- parsing
    @classmethod
    def parse(cls, text: str) -> "Scheme":
        raw = (text or "").strip().lower()
        tokens = [t for t in raw.split("-") if t]
        if not tokens:
            raise ConfigError("Пустой идентификатор схемы")

        rs = tokens[0] == "rs"
        if rs:
            tokens.pop(0)
        if not tokens or tokens[0] not in DESIGNS:
            raise ConfigError(f"Схема '{text}': ожидался тип zf или mmse")
        design = tokens.pop(0)

        structure = None
        if tokens and tokens[0] in STRUCTURES:
            structure = tokens.pop(0)

        combiner = "none"
        if tokens and tokens[0] in COMBINERS:
            combiner = tokens.pop(0)
            if not rs:
                raise ConfigError(f"Схема '{text}': комбайнер общего потока требует rate-splitting (rs-)")

        branches = 1
        if tokens and tokens[0].startswith("mb"):
            try:
                branches = int(tokens.pop(0)[2:])
            except ValueError:
                raise ConfigError(f"Схема '{text}': некорректное число ветвей") from None
            if branches < 1:
                raise ConfigError(f"Схема '{text}': число ветвей должно быть >= 1")

        if tokens:
            raise ConfigError(f"Схема '{text}': лишние элементы {'-'.join(tokens)}")
        if structure is None and design == "mmse":
            raise UnsupportedConfigurationError(f"Схема '{text}': линейный MMSE-прекодер не поддерживается")
        if structure is None and branches > 1:
            raise UnsupportedConfigurationError(f"Схема '{text}': multi-branch применим только к THP")
        return cls(design=design, structure=structure, rate_splitting=rs, combiner=combiner, branches=branches)

    @property
    def scheme_id(self) -> str:
        parts = ["rs"] if self.rate_splitting else []
        parts.append(self.design)
        if self.structure:
            parts.append(self.structure)
        if self.rate_splitting and self.combiner != "none":
            parts.append(self.combiner)
        if self.branches > 1:
            parts.append(f"mb{self.branches}")
        return "-".join(parts)

    @property
    def is_linear(self) -> bool:
        return self.structure is None

    def with_delta(self, delta: float) -> "Scheme":
        if not self.rate_splitting and delta != 0.0:
            raise ConfigError(f"Схема {self.scheme_id} без rate-splitting: delta должна быть 0")
        return replace(self, delta=float(delta))

    def validate_for(self, system: SystemConfig) -> None:
        if system.M != system.Nr:
            raise UnsupportedConfigurationError(
                f"Поддерживается только полная загрузка M = Nr (M={system.M}, Nr={system.Nr})"
            )
        if self.branches > 1:
            if len(set(system.Nk)) != 1:
                raise UnsupportedConfigurationError("Multi-branch требует одинакового Nk у всех пользователей")
            if self.branches > system.K * system.Nk[0]:
                raise ConfigError(
                    f"Число ветвей {self.branches} больше K·Nk = {system.K * system.Nk[0]}"
                )

    # --------------------------------------------------------------- synthesis
    def build(self, H_hat: np.ndarray, system: SystemConfig) -> BuiltPrecoder:
        """Строит прекодер один раз по оценке канала."""
        Etr = system.Etr
        if self.rate_splitting:
            p_c = common_precoder(H_hat, self.delta, Etr)
        else:
            p_c = np.zeros(H_hat.shape[1], dtype=complex)

        if self.is_linear:
            cols = zf_linear_precoder(H_hat, Etr, self.delta)
            return BuiltPrecoder(rs=RsPrecoder(p_c=p_c, delta=self.delta, q_cols=cols, tx_cols=cols), filters=None)

        if self.design == "zf":
            filters = zf_thp_filters(H_hat, self.structure)
        else:
            filters = mmse_thp_filters(H_hat, Etr, system.sigma_n2, self.structure)
        filters = with_beta(filters, Etr, self.delta)
        rs = RsPrecoder(
            p_c=p_c,
            delta=self.delta,
            q_cols=effective_private_columns(filters),
            tx_cols=transmit_columns(filters),
        )
        return BuiltPrecoder(rs=rs, filters=filters)
