# rsthp/errors.py
from __future__ import annotations

import logging
from typing import Optional

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


class SimulationError(Exception):
    """Базовая ошибка симулятора. Ретраибельные ошибки harness перезапускает с новой реализацией."""

    exit_code: int = 1

    def __init__(self, message: str, is_retryable: bool = False, details: Optional[str] = None):
        super().__init__(message)
        self.is_retryable = is_retryable
        self.details = details
        # ретраибельные ошибки ожидаемы (вырожденные реализации) - не шумим
        log = logger.debug if is_retryable else logger.error
        log("%s: %s (retryable=%s, details=%s)", type(self).__name__, message, is_retryable, details or "None")


class ConfigError(SimulationError):
    exit_code = EXIT_CONFIG


class UnsupportedConfigurationError(ConfigError):
    pass


class ModulationError(ConfigError):
    pass


class ShapeError(ConfigError, ValueError):
    pass


class NumericError(SimulationError):
    exit_code = EXIT_NUMERIC


class RankDeficiencyError(NumericError):
    def __init__(self, message: str, details: Optional[str] = None):
        super().__init__(message, is_retryable=True, details=details)


class CombinerError(NumericError):
    pass
