# rsthp/__init__.py
"""Ядро симулятора: THP-прекодеры, rate-splitting, комбайнеры, расчёт скоростей."""

__version__ = "0.1.0"
