# config.py
import os
import platform
from pathlib import Path
from typing import List

# ==================== Загрузка переменных окружения из .env ====================
from dotenv import load_dotenv
load_dotenv()

# ==================== Базовые настройки ====================
if platform.system() == "Windows":
    _DEFAULT_LOG_DIR = Path(os.getenv("APPDATA") or Path.home()) / "RsThpSim" / "logs"
else:
    _DEFAULT_LOG_DIR = Path.home() / ".local" / "share" / "RsThpSim" / "logs"

# Каталог создаётся лениво в setup_logging()
LOG_DIR: Path = Path(os.getenv("RSTHP_LOG_DIR") or _DEFAULT_LOG_DIR)


def _bool_env(name: str, default: bool) -> bool:
    """Безопасно преобразует переменную окружения в булево значение."""
    v = os.getenv(name)
    if v is None:
        return default
    return str(v).strip().lower() in ("1", "true", "yes", "y", "да")


def _int_env(name: str, default: int) -> int:
    """Безопасно преобразует переменную окружения в целое число."""
    try:
        return int(os.getenv(name, str(default)))
    except (ValueError, TypeError):
        return default


# ==================== Monte-Carlo ====================
DEFAULT_SEED: int = _int_env("RSTHP_SEED", 1)
MC_CHANNELS: int = _int_env("RSTHP_MC_CHANNELS", 100)   # оценок канала (внешний цикл)
MC_ERRORS: int = _int_env("RSTHP_MC_ERRORS", 100)       # реализаций ошибки на оценку
CI_MC_CHANNELS: int = 20
CI_MC_ERRORS: int = 20
CI_LEVEL: float = 0.95

# ==================== Распределение мощности (delta) ====================
DELTA_GRID_POINTS: int = _int_env("RSTHP_DELTA_GRID_POINTS", 41)
PILOT_CHANNELS: int = _int_env("RSTHP_PILOT_CHANNELS", 20)
PILOT_ERRORS: int = _int_env("RSTHP_PILOT_ERRORS", 20)

# ==================== Multi-branch ====================
BRANCH_INNER_MC: int = _int_env("RSTHP_BRANCH_INNER_MC", 20)

# ==================== Численные допуски ====================
RANK_TOL: float = 1e-12
FACTOR_TOL: float = 1e-10
RANK_RESAMPLE_ATTEMPTS: int = _int_env("RSTHP_RANK_RESAMPLE_ATTEMPTS", 5)

# ==================== Политики ====================
# Буквальное чтение знаменателя beta для ZF-cTHP (сумма l_kk^2 вместо l_kk^-2)
ZF_CTHP_BETA_LITERAL: bool = _bool_env("RSTHP_ZF_CTHP_BETA_LITERAL", False)
# Ковариация MMSEc: "true" (истинный канал) или "estimate" (оценка канала)
MMSEC_COVARIANCE: str = (os.getenv("RSTHP_MMSEC_COVARIANCE") or "true").strip().lower()

# ==================== Параллелизм ====================
DEFAULT_THREADS: int = _int_env("RSTHP_THREADS", 1)

# ==================== Вывод ====================
RESULT_SCHEMA_VERSION: str = "1"
RESULT_COLUMNS: List[str] = [
    "scheme", "snr_dB", "sigma_e2", "delta_used",
    "esr_total", "esr_common", "esr_private", "ci_halfwidth",
    "n_channels", "n_errors", "seed",
]

# ==================== Логирование ====================
LOG_LEVEL: str = (os.getenv("RSTHP_LOG_LEVEL") or "INFO").upper()
LOG_ROTATION_SIZE: int = 5 * 1024 * 1024  # 5MB
LOG_BACKUP_COUNT: int = 5


# ==================== Валидация конфигурации ====================
def validate_config() -> None:
    """Проверяет корректность настроек окружения перед запуском эксперимента."""
    errors = []

    if MC_CHANNELS < 1 or MC_ERRORS < 1:
        errors.append(f"Размеры Monte-Carlo должны быть >= 1 (каналы={MC_CHANNELS}, ошибки={MC_ERRORS})")
    if PILOT_CHANNELS < 1 or PILOT_ERRORS < 1:
        errors.append("Пилотный ансамбль для поиска delta должен быть непустым")
    if DELTA_GRID_POINTS < 2:
        errors.append(f"Сетка delta должна содержать минимум 2 точки, задано {DELTA_GRID_POINTS}")
    if BRANCH_INNER_MC < 1:
        errors.append("RSTHP_BRANCH_INNER_MC должен быть >= 1")
    if DEFAULT_THREADS < 1:
        errors.append(f"RSTHP_THREADS должен быть >= 1, задано {DEFAULT_THREADS}")
    if RANK_RESAMPLE_ATTEMPTS < 1:
        errors.append("RSTHP_RANK_RESAMPLE_ATTEMPTS должен быть >= 1")
    if MMSEC_COVARIANCE not in ("true", "estimate"):
        errors.append(f"RSTHP_MMSEC_COVARIANCE: ожидалось 'true' или 'estimate', получено '{MMSEC_COVARIANCE}'")
    if LOG_LEVEL not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
        errors.append(f"Неизвестный уровень логирования: {LOG_LEVEL}")

    if errors:
        raise ValueError("Ошибки конфигурации:\n- " + "\n- ".join(errors))


if __name__ == "__main__":
    validate_config()
    print("Конфигурация корректна")
    print(f"LOG_DIR = {LOG_DIR}")
    print(f"MC = {MC_CHANNELS}x{MC_ERRORS}, delta grid = {DELTA_GRID_POINTS}, threads = {DEFAULT_THREADS}")
