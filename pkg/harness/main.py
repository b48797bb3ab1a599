# harness/main.py
"""
CLI симулятора: run / preset / table5 / sweep-delta / flops.
Коды выхода: 0 - успех, 2 - ошибка конфигурации, 3 - численная ошибка.
"""
from __future__ import annotations

import argparse
import logging
import sys
import uuid
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

import pandas as pd

import config
from harness.experiment import ExperimentSpec, load_experiment, run_experiment, sweep_delta
from harness.output import FORMATS, render_markdown, rows_frame, write_delta_curve, write_flops_table, write_results
from harness.presets import PRESETS, get_preset
from logging_setup import setup_logging
from rsthp.errors import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, ConfigError, SimulationError
from rsthp.flops import FLOPS_SCHEMES, FlopsModel, flops_scheme, flops_table, zf_thp_steps

logger = logging.getLogger(__name__)


# ----- аргументы -----
def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help="Базовый seed (по умолчанию из конфигурации)")
    p.add_argument("--out", type=Path, default=None, help="Файл результатов (csv/json/xlsx)")
    p.add_argument("--format", choices=FORMATS, default=None, help="Формат вывода (иначе по расширению)")
    p.add_argument("--parallel", type=int, default=config.DEFAULT_THREADS, help="Число потоков Monte-Carlo")
    p.add_argument("--ci", action="store_true", help="Уменьшенные размеры Monte-Carlo для быстрых проверок")
    p.add_argument("--mc-channels", type=int, default=None, help="Число оценок канала")
    p.add_argument("--mc-errors", type=int, default=None, help="Число реализаций ошибки на оценку")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rsthp", description="RS-THP: Monte-Carlo симулятор MU-MIMO downlink.")
    sub = ap.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="Эксперимент из INI-файла")
    p_run.add_argument("--config", type=Path, required=True, help="Путь к INI с секциями [system], [errors], [run]")
    _add_run_options(p_run)

    p_pre = sub.add_parser("preset", help="Готовый эксперимент")
    p_pre.add_argument("name", choices=sorted(PRESETS), help="Имя пресета")
    _add_run_options(p_pre)

    p_t5 = sub.add_parser("table5", help="Сравнение схем при SNR 20 дБ и σe² ∈ {0.05, 0.1, 0.2}")
    _add_run_options(p_t5)

    p_sw = sub.add_parser("sweep-delta", help="Кривая ESR(delta) для RS-схем")
    src = p_sw.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", type=Path, help="Путь к INI")
    src.add_argument("--preset", choices=sorted(PRESETS), help="Имя пресета")
    p_sw.add_argument("--scheme", action="append", default=None, help="Ограничить схемами (можно несколько раз)")
    p_sw.add_argument("--snr", type=float, action="append", default=None, help="Ограничить точками SNR, дБ")
    _add_run_options(p_sw)

    p_fl = sub.add_parser("flops", help="Вычислительная сложность схем")
    p_fl.add_argument("--n", type=int, default=12, help="Nt = Nr = n")
    p_fl.add_argument("--k", type=int, default=6, help="Число пользователей K")
    p_fl.add_argument("--scheme", choices=FLOPS_SCHEMES, default=None, help="Одна схема; без флага - все")
    p_fl.add_argument("--table", type=str, default=None, help="Список n через запятую: таблица FLOPS от n")
    p_fl.add_argument("--steps", action="store_true", help="Пошаговая сложность ZF-THP")
    p_fl.add_argument("--out", type=Path, default=None, help="Файл таблицы (csv/json/xlsx)")
    p_fl.add_argument("--format", choices=FORMATS, default=None)
    return ap


# ----- команды -----
def _fmt(value: Fraction) -> str:
    return str(value.numerator) if value.denominator == 1 else f"{float(value):.3f}"


def _apply_overrides(spec: ExperimentSpec, args: argparse.Namespace) -> ExperimentSpec:
    mc_channels, mc_errors = args.mc_channels, args.mc_errors
    if args.ci:
        mc_channels = mc_channels or config.CI_MC_CHANNELS
        mc_errors = mc_errors or config.CI_MC_ERRORS
    return spec.with_overrides(seed=args.seed, mc_channels=mc_channels, mc_errors=mc_errors)


def _load_spec(args: argparse.Namespace) -> ExperimentSpec:
    seed = args.seed if args.seed is not None else config.DEFAULT_SEED
    if args.command == "table5":
        spec = get_preset("table5", seed=seed, ci=args.ci)
    elif args.command == "preset":
        spec = get_preset(args.name, seed=seed, ci=args.ci)
    elif getattr(args, "preset", None):
        spec = get_preset(args.preset, seed=seed, ci=args.ci)
    else:
        spec = load_experiment(args.config)
    return _apply_overrides(spec, args)


def cmd_run(args: argparse.Namespace) -> int:
    if args.parallel < 1:
        raise ConfigError(f"--parallel должен быть >= 1, задано {args.parallel}")
    spec = _load_spec(args)
    logger.info(
        "Эксперимент %s: %d схем, SNR %s, MC %dx%d, seed=%d, потоков=%d",
        spec.name, len(spec.schemes), spec.snr_grid_dB,
        spec.system.mc_channels, spec.system.mc_errors, spec.system.seed, args.parallel,
    )
    rows = run_experiment(spec, workers=args.parallel)
    if args.out:
        out = write_results(rows, args.out, args.format)
        print(f"OK: written {out}")
    else:
        print(render_markdown(rows_frame(rows), title=spec.name))
    return EXIT_OK


def cmd_sweep_delta(args: argparse.Namespace) -> int:
    spec = _load_spec(args)
    if args.scheme:
        wanted = {s.strip().lower() for s in args.scheme}
        spec.schemes = [s for s in spec.schemes if s.scheme_id in wanted]
        if not spec.schemes:
            raise ConfigError(f"Ни одна из схем {sorted(wanted)} не входит в эксперимент")
    if args.snr:
        spec.snr_grid_dB = list(args.snr)
    records = sweep_delta(spec, workers=args.parallel)
    if args.out:
        out = write_delta_curve(records, args.out, args.format)
        print(f"OK: written {out}")
    else:
        print(render_markdown(pd.DataFrame(records), title=f"{spec.name}: ESR(delta)"))
    return EXIT_OK


def cmd_flops(args: argparse.Namespace) -> int:
    if args.steps:
        for name, value in zf_thp_steps(args.n):
            print(f"{name}\t{_fmt(value)}")
        return EXIT_OK

    if args.table:
        try:
            n_values = [int(x) for x in args.table.split(",") if x.strip()]
        except ValueError:
            raise ConfigError(f"--table: ожидался список целых, получено '{args.table}'") from None
        schemes = [args.scheme] if args.scheme else list(FLOPS_SCHEMES)
        records = flops_table(n_values, args.k, schemes)
        if args.out:
            out = write_flops_table(records, args.out, args.format)
            print(f"OK: written {out}")
        else:
            print(render_markdown(pd.DataFrame(records), title=f"FLOPS, K={args.k}"))
        return EXIT_OK

    if args.scheme:
        print(_fmt(flops_scheme(FlopsModel(scheme=args.scheme, n=args.n, K=args.k))))
        return EXIT_OK
    for s in FLOPS_SCHEMES:
        print(f"{s}\t{_fmt(flops_scheme(FlopsModel(scheme=s, n=args.n, K=args.k)))}")
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "preset": cmd_run,
    "table5": cmd_run,
    "sweep-delta": cmd_sweep_delta,
    "flops": cmd_flops,
}


# ----- CLI -----
def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    seed = getattr(args, "seed", None)
    log_path = setup_logging(
        app_name="rsthp",
        log_dir=config.LOG_DIR,
        level_console=getattr(logging, config.LOG_LEVEL, logging.INFO),
        run_id=f"{args.command}-{uuid.uuid4().hex[:8]}",
        seed=seed if seed is not None else config.DEFAULT_SEED,
    )
    logger.debug("Logging initialized (path=%s)", log_path)

    try:
        config.validate_config()
        return COMMANDS[args.command](args)
    except ValueError as e:
        # validate_config и ShapeError
        logger.error("%s", e)
        print(f"Ошибка конфигурации: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code
    except (ArithmeticError, FloatingPointError) as e:
        logger.exception("Численный сбой")
        print(f"Численный сбой: {e}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
