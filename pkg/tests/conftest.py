import pytest

from services import db
from services.walk import CoinOperator, CoinState, CycleConfig


@pytest.fixture(autouse=True)
def registry(tmp_path, monkeypatch):
    """Point the run registry at a throwaway SQLite file for every test."""
    monkeypatch.setenv("QWALK_DATABASE_URL", f"sqlite:///{tmp_path / 'runs.db'}")
    monkeypatch.delenv("QWALK_DISABLE_REGISTRY", raising=False)
    monkeypatch.delenv("QWALK_CONFIG", raising=False)
    db.reset_engine()
    db.init_db()
    yield
    db.reset_engine()


@pytest.fixture
def symmetric25():
    return CycleConfig(25, CoinOperator.symmetric())


@pytest.fixture
def hadamard25():
    return CycleConfig(25, CoinOperator.hadamard())


@pytest.fixture
def balanced():
    return CoinState.balanced()
