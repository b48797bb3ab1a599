# harness/presets.py
"""
Готовые эксперименты: сравнительная таблица при несовершенном CSIT,
кривые ESR от SNR, масштабируемая ошибка и multi-branch.
"""
from __future__ import annotations

from typing import Callable, Dict, List

import config
from harness.experiment import ExperimentSpec
from rsthp.channel import ErrorModel, SystemConfig
from rsthp.errors import ConfigError
from rsthp.schemes import Scheme

SNR_SWEEP_DB = [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0]

TABLE5_SCHEMES = ("zf", "zf-cthp", "zf-dthp", "rs-zf-mmsec", "rs-zf-cthp-mmsec", "rs-zf-dthp-mmsec")
TABLE5_SIGMA_E2 = (0.05, 0.1, 0.2)

SNR_CURVE_SCHEMES = (
    "zf", "rs-zf-mmsec",
    "zf-cthp", "zf-dthp", "rs-zf-cthp-mmsec", "rs-zf-dthp-mmsec",
    "mmse-cthp", "mmse-dthp", "rs-mmse-cthp-mmsec", "rs-mmse-dthp-mmsec",
)

COMBINER_SCHEMES = (
    "rs-zf-cthp-minmax", "rs-zf-cthp-mrc", "rs-zf-cthp-mmsec",
    "rs-zf-dthp-minmax", "rs-zf-dthp-mrc", "rs-zf-dthp-mmsec",
)

MB_SCHEMES = (
    "zf-cthp", "zf-cthp-mb2", "zf-cthp-mb4",
    "rs-zf-cthp-mmsec", "rs-zf-cthp-mmsec-mb2", "rs-zf-cthp-mmsec-mb4",
    "mmse-dthp", "mmse-dthp-mb4", "rs-mmse-dthp-mmsec", "rs-mmse-dthp-mmsec-mb4",
)


def _system(seed: int, ci: bool, modulation: str = "gaussian") -> SystemConfig:
    return SystemConfig(
        Nt=12, K=6, Nk=2, Etr=1.0, sigma_n2=1.0, modulation=modulation,
        mc_channels=config.CI_MC_CHANNELS if ci else config.MC_CHANNELS,
        mc_errors=config.CI_MC_ERRORS if ci else config.MC_ERRORS,
        seed=seed,
    )


def _schemes(ids) -> List[Scheme]:
    return [Scheme.parse(s) for s in ids]


def table5(seed: int = config.DEFAULT_SEED, ci: bool = False) -> ExperimentSpec:
    """SNR 20 дБ, σe² ∈ {0.05, 0.1, 0.2}, линейные и THP-схемы с RS и без."""
    return ExperimentSpec(
        system=_system(seed, ci),
        schemes=_schemes(TABLE5_SCHEMES),
        snr_grid_dB=[20.0],
        error_models=[ErrorModel(mode="fixed", sigma_e2=v) for v in TABLE5_SIGMA_E2],
        name="table5",
    )


def perfect_csit(seed: int = config.DEFAULT_SEED, ci: bool = False) -> ExperimentSpec:
    """Идеальный CSIT, ESR от SNR."""
    return ExperimentSpec(
        system=_system(seed, ci),
        schemes=_schemes(SNR_CURVE_SCHEMES),
        snr_grid_dB=list(SNR_SWEEP_DB),
        error_models=[ErrorModel(mode="fixed", sigma_e2=0.0)],
        name="perfect-csit",
    )


def fixed_error(seed: int = config.DEFAULT_SEED, ci: bool = False) -> ExperimentSpec:
    """Фиксированная ошибка σe² = 0.05, ESR от SNR, сравнение комбайнеров."""
    return ExperimentSpec(
        system=_system(seed, ci),
        schemes=_schemes(SNR_CURVE_SCHEMES + tuple(s for s in COMBINER_SCHEMES if s not in SNR_CURVE_SCHEMES)),
        snr_grid_dB=list(SNR_SWEEP_DB),
        error_models=[ErrorModel(mode="fixed", sigma_e2=0.05)],
        name="fixed-error",
    )


def scaled_error(seed: int = config.DEFAULT_SEED, ci: bool = False) -> ExperimentSpec:
    """Ошибка убывает с мощностью: σe² = 0.95·Etr^-0.6."""
    return ExperimentSpec(
        system=_system(seed, ci),
        schemes=_schemes(("zf-cthp", "rs-zf-cthp-mmsec", "mmse-dthp", "rs-mmse-dthp-mmsec")),
        snr_grid_dB=list(SNR_SWEEP_DB),
        error_models=[ErrorModel(mode="snr_scaled", scale=0.95, alpha=0.6)],
        name="scaled-error",
    )


def multibranch(seed: int = config.DEFAULT_SEED, ci: bool = False) -> ExperimentSpec:
    """Multi-branch при σe² = 0.06: L_o ∈ {1, 2, 4}."""
    return ExperimentSpec(
        system=_system(seed, ci),
        schemes=_schemes(MB_SCHEMES),
        snr_grid_dB=list(SNR_SWEEP_DB),
        error_models=[ErrorModel(mode="fixed", sigma_e2=0.06)],
        name="multibranch",
    )


PRESETS: Dict[str, Callable[..., ExperimentSpec]] = {
    "table5": table5,
    "perfect-csit": perfect_csit,
    "fixed-error": fixed_error,
    "scaled-error": scaled_error,
    "multibranch": multibranch,
}


def get_preset(name: str, seed: int = config.DEFAULT_SEED, ci: bool = False) -> ExperimentSpec:
    try:
        factory = PRESETS[name.strip().lower()]
    except KeyError:
        raise ConfigError(f"Неизвестный пресет '{name}'. Доступны: {', '.join(PRESETS)}") from None
    return factory(seed=seed, ci=ci)
