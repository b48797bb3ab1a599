# harness/output.py
"""
Запись результатов: CSV (фиксированный порядок столбцов), JSON (записи + версия схемы), XLSX.
Вывод детерминирован: одинаковые строки дают побайтно одинаковые CSV/JSON.
"""
from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd

import config
from harness.experiment import ResultRow
from rsthp.errors import ConfigError

logger = logging.getLogger(__name__)

FORMATS = ("csv", "json", "xlsx")
FLOAT_FORMAT = "%.6f"


def detect_format(path: Path, explicit: Optional[str] = None) -> str:
    """Явный формат или по расширению файла; по умолчанию csv."""
    fmt = (explicit or Path(path).suffix.lstrip(".") or "csv").lower()
    if fmt not in FORMATS:
        raise ConfigError(f"Неизвестный формат вывода '{fmt}'. Доступны: {', '.join(FORMATS)}")
    return fmt


def rows_frame(rows: Sequence[ResultRow]) -> pd.DataFrame:
    return pd.DataFrame([r.as_dict() for r in rows], columns=config.RESULT_COLUMNS)


def _records(df: pd.DataFrame) -> List[Dict[str, Any]]:
    # округление как в CSV, чтобы JSON не зависел от последних битов float
    out = []
    for rec in df.to_dict(orient="records"):
        out.append({k: (round(v, 6) if isinstance(v, float) else v) for k, v in rec.items()})
    return out


def write_frame(df: pd.DataFrame, path: Path, fmt: Optional[str] = None, kind: str = "esr") -> Path:
    path = Path(path)
    fmt = detect_format(path, fmt)
    path.parent.mkdir(parents=True, exist_ok=True)

    if fmt == "csv":
        df.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    elif fmt == "json":
        payload = {"schema_version": config.RESULT_SCHEMA_VERSION, "kind": kind, "rows": _records(df)}
        path.write_text(json.dumps(payload, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
    else:
        with pd.ExcelWriter(path, engine="openpyxl") as xw:
            df.to_excel(xw, index=False, sheet_name=kind[:31])
    logger.info("Результаты записаны: %s (%s, %d строк)", path, fmt, len(df))
    return path


def write_results(rows: Sequence[ResultRow], path: Path, fmt: Optional[str] = None) -> Path:
    return write_frame(rows_frame(rows), path, fmt, kind="esr")


def write_delta_curve(records: Sequence[Dict[str, Any]], path: Path, fmt: Optional[str] = None) -> Path:
    cols = ["scheme", "snr_dB", "sigma_e2", "delta", "esr_total", "esr_common", "esr_private", "is_optimum"]
    return write_frame(pd.DataFrame(list(records), columns=cols), path, fmt, kind="delta_curve")


def write_flops_table(records: Sequence[Dict[str, Any]], path: Path, fmt: Optional[str] = None) -> Path:
    return write_frame(pd.DataFrame(list(records)), path, fmt, kind="flops")


def render_markdown(df: pd.DataFrame, title: str = "") -> str:
    """Таблица для консоли (stdout)."""
    lines: List[str] = []
    if title:
        lines.append(f"# {title}")
        lines.append("")
    cols = list(df.columns)
    lines.append("| " + " | ".join(cols) + " |")
    lines.append("|" + "|".join("---" if df[c].dtype == object else "---:" for c in cols) + "|")
    for rec in df.itertuples(index=False):
        cells = [f"{v:.4f}" if isinstance(v, float) else str(v) for v in rec]
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines)
