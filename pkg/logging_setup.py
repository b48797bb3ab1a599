# logging_setup.py
from __future__ import annotations

import logging
from logging.handlers import RotatingFileHandler
from pathlib import Path
import sys
from typing import Optional

from config import LOG_ROTATION_SIZE, LOG_BACKUP_COUNT


class RunContextFilter(logging.Filter):
    """Добавляет в каждую запись идентификатор прогона и seed."""

    def __init__(self, run_id: str = "-", seed: Optional[int] = None):
        super().__init__()
        self.run_id = run_id
        self.seed = seed

    def filter(self, record: logging.LogRecord) -> bool:
        record.run_id = self.run_id
        record.seed = "-" if self.seed is None else self.seed
        return True


def setup_logging(
    app_name: str,
    log_dir: Path,
    level_console: int = logging.INFO,
    level_file: int = logging.DEBUG,
    reset: bool = True,
    run_id: str = "-",
    seed: Optional[int] = None,
) -> Path:
    log_dir.mkdir(parents=True, exist_ok=True)
    logfile = log_dir / f"{app_name}.log"

    root = logging.getLogger()
    root.setLevel(logging.DEBUG)
    # убираем ранее навешанные хендлеры, чтобы не было дублей
    if reset and root.handlers:
        for h in list(root.handlers):
            root.removeHandler(h)

    fmt = logging.Formatter(
        "%(asctime)s - %(name)s - %(levelname)s - [run=%(run_id)s seed=%(seed)s] %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )
    ctx = RunContextFilter(run_id=run_id, seed=seed)

    # файл
    fh = RotatingFileHandler(logfile, maxBytes=LOG_ROTATION_SIZE, backupCount=LOG_BACKUP_COUNT, encoding="utf-8")
    fh.setLevel(level_file)
    fh.setFormatter(fmt)
    fh.addFilter(ctx)
    root.addHandler(fh)

    # консоль (stderr: stdout занят выводом таблиц)
    ch = logging.StreamHandler(sys.stderr)
    ch.setLevel(level_console)
    ch.setFormatter(fmt)
    ch.addFilter(ctx)
    root.addHandler(ch)

    # numpy сообщает о переполнениях через warnings
    logging.captureWarnings(True)
    return logfile
