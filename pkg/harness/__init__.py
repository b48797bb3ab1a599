# harness/__init__.py
"""Оркестрация экспериментов: конфигурация, пресеты, запись результатов и CLI."""
