# tools/doctor.py
from __future__ import annotations

import argparse
import json
import platform
from datetime import datetime
from importlib import metadata
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

import config
from config import LOG_DIR
from rsthp.channel import SystemConfig, generate_estimate
from rsthp.flops import FlopsModel, flops_scheme
from rsthp.numerics import RngStreams, check_lq, lq_decompose
from rsthp.schemes import Scheme

# Пакеты окружения, без которых симулятор не запустится
REQUIRED = ["numpy", "scipy", "pandas", "openpyxl", "python-dotenv", "tenacity"]

# Эталон из таблицы сложности: ZF-THP при n = 12
FLOPS_REFERENCE = {("zf-thp", 12, 6): 11176}


def dump_environment() -> Dict[str, Any]:
    pkgs: Dict[str, Optional[str]] = {}
    for name in REQUIRED:
        try:
            pkgs[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            pkgs[name] = None
    return {
        "python": platform.python_version(),
        "platform": platform.platform(),
        "packages": pkgs,
        "missing": [k for k, v in pkgs.items() if v is None],
    }


def dump_config() -> Dict[str, Any]:
    out: Dict[str, Any] = {
        "mc": f"{config.MC_CHANNELS}x{config.MC_ERRORS}",
        "delta_grid_points": config.DELTA_GRID_POINTS,
        "pilot": f"{config.PILOT_CHANNELS}x{config.PILOT_ERRORS}",
        "branch_inner_mc": config.BRANCH_INNER_MC,
        "threads": config.DEFAULT_THREADS,
        "mmsec_covariance": config.MMSEC_COVARIANCE,
        "zf_cthp_beta_literal": config.ZF_CTHP_BETA_LITERAL,
        "log_dir": str(LOG_DIR),
    }
    try:
        config.validate_config()
        out["valid"] = True
    except ValueError as e:
        out["valid"] = False
        out["errors"] = str(e)
    return out


def numeric_checks(seed: int = 1) -> List[Dict[str, Any]]:
    """Быстрые численные проверки на одной реализации канала 12×12."""
    checks: List[Dict[str, Any]] = []
    system = SystemConfig(Nt=12, K=6, Nk=2, Etr=100.0, mc_channels=1, mc_errors=1, seed=seed)
    H = generate_estimate(system, RngStreams(seed).stream(0, 0, 0))

    try:
        ok = check_lq(lq_decompose(H), H)
        checks.append({"name": "lq_reconstruction", "ok": bool(ok)})
    except Exception as e:
        checks.append({"name": "lq_reconstruction", "ok": False, "error": str(e)})

    for sid in ("rs-zf-cthp-mmsec", "rs-zf-dthp-mmsec", "rs-mmse-cthp-mmsec", "rs-mmse-dthp-mmsec"):
        try:
            built = Scheme.parse(sid).with_delta(0.2).build(H, system)
            power = built.rs.transmit_power
            unit = bool(np.allclose(np.diag(built.filters.B), 1.0))
            checks.append({
                "name": f"power_budget[{sid}]",
                "ok": bool(abs(power - system.Etr) <= 1e-9 * system.Etr) and unit,
                "value": round(power, 9),
            })
        except Exception as e:
            checks.append({"name": f"power_budget[{sid}]", "ok": False, "error": str(e)})

    for (scheme, n, K), expected in FLOPS_REFERENCE.items():
        got = flops_scheme(FlopsModel(scheme=scheme, n=n, K=K))
        checks.append({"name": f"flops[{scheme}, n={n}]", "ok": got == expected, "value": str(got)})
    return checks


def render_markdown(report: Dict[str, Any]) -> str:
    lines: List[str] = []
    lines.append(f"# RS-THP Doctor - {report.get('ts')}")
    lines.append("")
    env = report.get("environment", {})
    lines.append("## Environment")
    lines.append(f"- Python: **{env.get('python')}** ({env.get('platform')})")
    lines.append("")
    lines.append("| Package | Version |")
    lines.append("|---|---|")
    for k, v in env.get("packages", {}).items():
        lines.append(f"| {k} | {v or '**missing**'} |")
    lines.append("")
    cfg = report.get("config", {})
    lines.append("## Config")
    lines.append(f"- State: **{'valid' if cfg.get('valid') else 'invalid'}**")
    for k, v in cfg.items():
        if k not in ("valid", "errors"):
            lines.append(f"- {k}: `{v}`")
    if cfg.get("errors"):
        lines.append("")
        lines.append("```")
        lines.append(cfg["errors"])
        lines.append("```")
    lines.append("")
    lines.append("## Numeric checks")
    lines.append("| Check | Result | Value |")
    lines.append("|---|---|---:|")
    for c in report.get("checks", []):
        value = c.get("value", c.get("error", ""))
        lines.append(f"| {c['name']} | {'OK' if c['ok'] else 'FAIL'} | {value} |")
    return "\n".join(lines)


def run(out: Path, seed: int = 1) -> bool:
    report: Dict[str, Any] = {
        "ts": datetime.now().isoformat(timespec="seconds"),
        "environment": dump_environment(),
        "config": dump_config(),
        "checks": numeric_checks(seed),
    }
    healthy = (
        not report["environment"]["missing"]
        and report["config"]["valid"]
        and all(c["ok"] for c in report["checks"])
    )
    report["healthy"] = healthy

    out_path = Path(out)
    if out_path.suffix.lower() == ".md":
        out_path.write_text(render_markdown(report), encoding="utf-8")
    else:
        out_path.write_text(json.dumps(report, ensure_ascii=False, indent=2), encoding="utf-8")
    print(f"OK: written {out_path}")
    return healthy


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = argparse.ArgumentParser(description="RS-THP Doctor: окружение + конфигурация + быстрые численные проверки.")
    ap.add_argument("-o", "--output", default="diagnostics_report.json", help="Путь к итоговому отчёту (JSON или MD).")
    ap.add_argument("--seed", type=int, default=1, help="Seed для тестовой реализации канала.")
    args = ap.parse_args(argv)
    return 0 if run(Path(args.output), seed=args.seed) else 1


if __name__ == "__main__":
    raise SystemExit(main())
