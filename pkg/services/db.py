import logging
import os
from contextlib import contextmanager
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional

from sqlalchemy import JSON, Column, DateTime, Integer, String, create_engine
from sqlalchemy.engine import Engine
from sqlalchemy.exc import SQLAlchemyError
from sqlalchemy.orm import declarative_base, sessionmaker

LOGGER = logging.getLogger(__name__)

Base = declarative_base()

_ENGINE: Optional[Engine] = None
_SESSION_FACTORY: Optional[sessionmaker] = None


def _utcnow() -> datetime:
    return datetime.now(timezone.utc).replace(tzinfo=None)


def _resolve_database_url() -> str:
    """Return the registry URL, defaulting to a local SQLite file."""
    url = os.getenv("QWALK_DATABASE_URL")
    if url:
        return url

    data_dir = Path("data")
    data_dir.mkdir(parents=True, exist_ok=True)
    return f"sqlite:///{data_dir / 'runs.db'}"


def registry_enabled() -> bool:
    return not os.getenv("QWALK_DISABLE_REGISTRY")


def get_engine() -> Engine:
    global _ENGINE, _SESSION_FACTORY
    if _ENGINE is None:
        url = _resolve_database_url()
        _ENGINE = create_engine(
            url,
            echo=False,
            future=True,
            connect_args={"check_same_thread": False} if url.startswith("sqlite") else {},
        )
        _SESSION_FACTORY = sessionmaker(bind=_ENGINE, autoflush=False, expire_on_commit=False)
    return _ENGINE


def reset_engine() -> None:
    """Drop the cached engine so the next call re-reads QWALK_DATABASE_URL."""
    global _ENGINE, _SESSION_FACTORY
    if _ENGINE is not None:
        _ENGINE.dispose()
    _ENGINE = None
    _SESSION_FACTORY = None


class Run(Base):
    __tablename__ = "runs"

    id = Column(Integer, primary_key=True)
    command = Column(String(40), nullable=False)
    manifest = Column(JSON, nullable=False)
    output_path = Column(String(1024), nullable=True)  # None when written to stdout
    output_sha256 = Column(String(64), nullable=False)
    created_at = Column(DateTime, default=_utcnow, nullable=False)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.id,
            "command": self.command,
            "manifest": self.manifest,
            "output_path": self.output_path,
            "output_sha256": self.output_sha256,
            "created_at": self.created_at.isoformat(),
        }


def init_db() -> None:
    """Create the registry tables if they do not already exist."""
    Base.metadata.create_all(get_engine())
    LOGGER.info("Run registry initialised at %s", _resolve_database_url())


@contextmanager
def get_session():
    """Provide a transactional scope around a series of operations."""
    get_engine()
    session = _SESSION_FACTORY()
    try:
        yield session
        session.commit()
    except SQLAlchemyError as exc:
        session.rollback()
        LOGGER.exception("Registry error: %s", exc)
        raise
    finally:
        session.close()


def record_run(command: str, manifest: Dict[str, Any], output_path: Optional[str], output_sha256: str) -> Dict[str, Any]:
    """Persist one invocation and return the stored row."""
    with get_session() as session:
        run = Run(
            command=command,
            manifest=manifest,
            output_path=output_path,
            output_sha256=output_sha256,
        )
        session.add(run)
        session.flush()
        session.refresh(run)
        return run.to_dict()


def recent_runs(limit: int = 10) -> List[Dict[str, Any]]:
    with get_session() as session:
        runs = session.query(Run).order_by(Run.created_at.desc(), Run.id.desc()).limit(limit).all()
        return [run.to_dict() for run in runs]


def get_run(run_id: int) -> Optional[Dict[str, Any]]:
    with get_session() as session:
        run = session.get(Run, run_id)
        return run.to_dict() if run else None


def count_runs(command: Optional[str] = None) -> int:
    with get_session() as session:
        query = session.query(Run)
        if command:
            query = query.filter(Run.command == command)
        return int(query.count())
