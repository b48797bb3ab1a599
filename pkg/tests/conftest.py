# tests/conftest.py
from __future__ import annotations

import logging

import numpy as np
import pytest

import config
from rsthp.channel import SystemConfig


@pytest.fixture(autouse=True)
def _isolated_logs(tmp_path, monkeypatch):
    """Логи CLI пишутся во временный каталог; хендлеры снимаются после теста."""
    monkeypatch.setattr(config, "LOG_DIR", tmp_path / "logs")
    root = logging.getLogger()
    before = list(root.handlers)
    yield
    for h in list(root.handlers):
        if h not in before:
            root.removeHandler(h)
            h.close()


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def small_system():
    """Nt = Nr = 4, два пользователя по две антенны."""
    return SystemConfig(Nt=4, K=2, Nk=2, Etr=100.0, sigma_n2=1.0, mc_channels=3, mc_errors=3, seed=5)


@pytest.fixture
def reference_system():
    return SystemConfig(Nt=12, K=6, Nk=2, Etr=100.0, sigma_n2=1.0, mc_channels=2, mc_errors=2, seed=1)


def cgauss(rng, rows, cols, variance=1.0):
    return np.sqrt(variance / 2.0) * (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols)))
