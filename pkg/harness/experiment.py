# harness/experiment.py
from __future__ import annotations

import configparser
import logging
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Dict, List, Optional

import config
from rsthp.channel import ErrorModel, SystemConfig
from rsthp.errors import ConfigError, SimulationError
from rsthp.numerics import STREAM_PILOT, RngStreams
from rsthp.precoding import allocate_common_power
from rsthp.rates import ergodic_sum_rate
from rsthp.schemes import Scheme

logger = logging.getLogger(__name__)


@dataclass
class ExperimentSpec:
    system: SystemConfig          # Etr задаётся сеткой SNR
    schemes: List[Scheme]
    snr_grid_dB: List[float]
    error_models: List[ErrorModel]
    delta_search: bool = True     # False - фиксированная delta_fixed для RS-схем
    delta_fixed: float = 0.0
    delta_grid_points: int = config.DELTA_GRID_POINTS
    pilot_channels: int = config.PILOT_CHANNELS
    pilot_errors: int = config.PILOT_ERRORS
    branch_inner_mc: int = config.BRANCH_INNER_MC
    output_path: Optional[Path] = None
    name: str = "experiment"

    def validate(self) -> None:
        errors = []
        if not self.schemes:
            errors.append("Список схем пуст")
        if not self.snr_grid_dB:
            errors.append("Сетка SNR пуста")
        if not self.error_models:
            errors.append("Не задана модель ошибки CSIT")
        if self.system.mc_errors < 1 or self.system.mc_channels < 1:
            errors.append(f"Размеры Monte-Carlo должны быть >= 1 ({self.system.mc_channels}x{self.system.mc_errors})")
        if self.delta_search and self.delta_grid_points < 2:
            errors.append("Сетка delta должна содержать минимум 2 точки")
        if not self.delta_search and not 0.0 <= self.delta_fixed <= 1.0:
            errors.append(f"Фиксированная delta вне [0, 1]: {self.delta_fixed}")
        if self.pilot_channels < 1 or self.pilot_errors < 1 or self.branch_inner_mc < 1:
            errors.append("Пилотный ансамбль и inner MC должны быть >= 1")
        if errors:
            raise ConfigError("Ошибки спецификации эксперимента:\n- " + "\n- ".join(errors))
        self.system.validate()
        for em in self.error_models:
            em.validate()
        for s in self.schemes:
            s.validate_for(self.system)

    def with_overrides(
        self,
        seed: Optional[int] = None,
        mc_channels: Optional[int] = None,
        mc_errors: Optional[int] = None,
    ) -> "ExperimentSpec":
        sys_kw: Dict[str, int] = {}
        if seed is not None:
            sys_kw["seed"] = seed
        if mc_channels is not None:
            sys_kw["mc_channels"] = mc_channels
        if mc_errors is not None:
            sys_kw["mc_errors"] = mc_errors
        return replace(self, system=replace(self.system, **sys_kw)) if sys_kw else self


@dataclass(frozen=True)
class ResultRow:
    scheme: str
    snr_dB: float
    sigma_e2: float
    delta_used: float
    esr_total: float
    esr_common: float
    esr_private: float
    ci_halfwidth: float
    n_channels: int
    n_errors: int
    seed: int

    def as_dict(self) -> Dict[str, object]:
        d = asdict(self)
        return {k: d[k] for k in config.RESULT_COLUMNS}


def etr_from_snr(snr_dB: float, sigma_n2: float) -> float:
    """SNR = Etr / σn²."""
    return float(sigma_n2 * 10.0 ** (snr_dB / 10.0))


def resolve_delta(
    spec: ExperimentSpec,
    scheme: Scheme,
    system: SystemConfig,
    error_model: ErrorModel,
    workers: int,
) -> float:
    """delta для точки (схема, SNR, σe²): поиск по пилотному ансамблю или фиксированное значение."""
    if not scheme.rate_splitting:
        return 0.0
    if not spec.delta_search:
        return spec.delta_fixed
    pilot = replace(system, mc_channels=spec.pilot_channels, mc_errors=spec.pilot_errors)
    streams = RngStreams(system.seed).child(STREAM_PILOT)
    return allocate_common_power(scheme, pilot, error_model, spec.delta_grid_points, streams, workers=workers).delta


def run_experiment(spec: ExperimentSpec, workers: int = 1) -> List[ResultRow]:
    """
    Для каждой (модель ошибки, схема, SNR): delta по политике, затем ESR.
    Все схемы и точки SNR используют одни и те же подпотоки RNG.
    """
    spec.validate()
    rows: List[ResultRow] = []
    total = len(spec.error_models) * len(spec.schemes) * len(spec.snr_grid_dB)
    done = 0
    for em in spec.error_models:
        for scheme in spec.schemes:
            for snr in spec.snr_grid_dB:
                system = replace(spec.system, Etr=etr_from_snr(snr, spec.system.sigma_n2))
                delta = resolve_delta(spec, scheme, system, em, workers)
                report = ergodic_sum_rate(
                    system, scheme.with_delta(delta), em, RngStreams(system.seed),
                    workers=workers, branch_inner_mc=spec.branch_inner_mc,
                )
                rows.append(ResultRow(
                    scheme=scheme.scheme_id,
                    snr_dB=float(snr),
                    sigma_e2=em.variance(system.Etr),
                    delta_used=delta,
                    esr_total=report.esr_total,
                    esr_common=report.esr_common,
                    esr_private=report.esr_private,
                    ci_halfwidth=report.ci_halfwidth,
                    n_channels=report.n_channels,
                    n_errors=report.n_errors,
                    seed=system.seed,
                ))
                done += 1
                logger.info(
                    "[%d/%d] %s SNR=%gdB σe²=%.4g δ=%.3f ESR=%.3f ± %.3f",
                    done, total, scheme.scheme_id, snr, em.variance(system.Etr), delta,
                    report.esr_total, report.ci_halfwidth,
                )
                if report.resamples:
                    logger.warning("%s SNR=%g: пересэмплировано %d оценок канала", scheme.scheme_id, snr, report.resamples)
    return rows


def sweep_delta(spec: ExperimentSpec, workers: int = 1) -> List[Dict[str, object]]:
    """Кривая ESR(delta) для RS-схем на основном ансамбле (общие случайные числа по сетке)."""
    spec.validate()
    out: List[Dict[str, object]] = []
    for em in spec.error_models:
        for scheme in spec.schemes:
            if not scheme.rate_splitting:
                logger.info("sweep-delta: схема %s без rate-splitting пропущена", scheme.scheme_id)
                continue
            for snr in spec.snr_grid_dB:
                system = replace(spec.system, Etr=etr_from_snr(snr, spec.system.sigma_n2))
                res = allocate_common_power(scheme, system, em, spec.delta_grid_points, RngStreams(system.seed), workers=workers)
                for d, t, c, p in zip(res.grid, res.esr_total, res.esr_common, res.esr_private):
                    out.append({
                        "scheme": scheme.scheme_id, "snr_dB": float(snr), "sigma_e2": em.variance(system.Etr),
                        "delta": float(d), "esr_total": float(t), "esr_common": float(c), "esr_private": float(p),
                        "is_optimum": bool(d == res.delta),
                    })
    return out


# ---------------------------------------------------------------------------
# Загрузка INI
# ---------------------------------------------------------------------------
def _floats(text: str) -> List[float]:
    return [float(x) for x in text.replace(";", ",").split(",") if x.strip()]


def load_experiment(path: Path) -> ExperimentSpec:
    """
    Читает INI со секциями [system], [errors], [run]; списки - через запятую.
    Ошибки собираются и выдаются одним ConfigError.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Файл конфигурации не найден: {path}")
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read(path, encoding="utf-8")
    except configparser.Error as e:
        raise ConfigError(f"Не удалось разобрать {path}", details=str(e)) from e

    errors: List[str] = []
    for section in ("system", "errors", "run"):
        if not cp.has_section(section):
            errors.append(f"Нет секции [{section}]")
    if errors:
        raise ConfigError("Ошибки конфигурации:\n- " + "\n- ".join(errors))

    sysc, errc, runc = cp["system"], cp["errors"], cp["run"]
    try:
        K = sysc.getint("k")
        nk_raw = [int(x) for x in sysc.get("nk", "1").split(",") if x.strip()]
        Nk = tuple(nk_raw * K) if len(nk_raw) == 1 else tuple(nk_raw)
        system = SystemConfig(
            Nt=sysc.getint("nt"),
            K=K,
            Nk=Nk,
            Etr=1.0,
            sigma_n2=sysc.getfloat("sigma_n2", 1.0),
            M=sysc.getint("m") if "m" in sysc else None,
            modulation=sysc.get("modulation", "gaussian"),
            mc_channels=sysc.getint("mc_channels", config.MC_CHANNELS),
            mc_errors=sysc.getint("mc_errors", config.MC_ERRORS),
            seed=sysc.getint("seed", config.DEFAULT_SEED),
        )
    except (TypeError, ValueError) as e:
        raise ConfigError(f"[system]: некорректное значение ({e})") from e

    mode = errc.get("mode", "fixed").strip().lower()
    try:
        if mode == "fixed":
            error_models = [ErrorModel(mode="fixed", sigma_e2=v) for v in _floats(errc.get("sigma_e2", "0"))]
        else:
            error_models = [ErrorModel(mode=mode, scale=errc.getfloat("scale", 0.95), alpha=errc.getfloat("alpha", 0.6))]
    except ValueError as e:
        raise ConfigError(f"[errors]: некорректное значение ({e})") from e

    try:
        schemes = [Scheme.parse(s) for s in runc.get("schemes", "").split(",") if s.strip()]
    except SimulationError as e:
        errors.append(str(e))
        schemes = []

    delta_raw = runc.get("delta", "grid").strip().lower()
    delta_search, delta_fixed = True, 0.0
    if delta_raw != "grid":
        try:
            delta_search, delta_fixed = False, float(delta_raw)
        except ValueError:
            errors.append(f"[run] delta: ожидалось 'grid' или число, получено '{delta_raw}'")

    try:
        spec = ExperimentSpec(
            system=system,
            schemes=schemes,
            snr_grid_dB=_floats(runc.get("snr_db", "")),
            error_models=error_models,
            delta_search=delta_search,
            delta_fixed=delta_fixed,
            delta_grid_points=runc.getint("delta_grid_points", config.DELTA_GRID_POINTS),
            pilot_channels=runc.getint("pilot_channels", config.PILOT_CHANNELS),
            pilot_errors=runc.getint("pilot_errors", config.PILOT_ERRORS),
            branch_inner_mc=runc.getint("branch_inner_mc", config.BRANCH_INNER_MC),
            name=runc.get("name", path.stem),
        )
    except ValueError as e:
        errors.append(f"[run]: некорректное значение ({e})")
        spec = None

    if errors:
        raise ConfigError("Ошибки конфигурации:\n- " + "\n- ".join(errors))
    spec.validate()
    return spec
