"""
Shared fixtures for the Kloosterman toolkit tests
"""

import pytest

from combinat import Sign
from finite_field import build_field


@pytest.fixture
def f3():
    return build_field(1)


@pytest.fixture
def f9():
    return build_field(2)


@pytest.fixture
def f27():
    return build_field(3)


@pytest.fixture
def minus():
    return Sign.MINUS


@pytest.fixture
def plus():
    return Sign.PLUS


@pytest.fixture(autouse=True)
def no_disk_cache(monkeypatch):
    """Tests recompute everything unless they point the store at tmp_path themselves"""
    monkeypatch.delenv('KLOOSTERMAN_CACHE_DIR', raising=False)
    monkeypatch.delenv('KLOOSTERMAN_WORKERS', raising=False)
