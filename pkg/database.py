import json
import logging
from datetime import datetime, timezone

from sqlalchemy import DateTime, Integer, String, Text, create_engine, select
from sqlalchemy.orm import DeclarativeBase, Mapped, Session, mapped_column

log = logging.getLogger(__name__)

_engines = {}


def utcnow():
    return datetime.now(timezone.utc)


class Base(DeclarativeBase):
    pass


class RunLog(Base):
    __tablename__ = "run_log"

    id: Mapped[int] = mapped_column(Integer, primary_key=True)
    command: Mapped[str] = mapped_column(String(32), nullable=False)
    config: Mapped[str] = mapped_column(Text)  # effective config as JSON
    exit_code: Mapped[int] = mapped_column(Integer, nullable=False)
    summary: Mapped[str] = mapped_column(Text)
    created_at: Mapped[datetime] = mapped_column(DateTime, default=utcnow)

    def to_dict(self):
        return {
            "id": self.id,
            "command": self.command,
            "config": json.loads(self.config) if self.config else None,
            "exit_code": self.exit_code,
            "summary": self.summary,
            "created_at": self.created_at.isoformat() if self.created_at else None,
        }


def get_engine(url):
    # Fix postgres:// -> postgresql:// as hosted providers hand it out
    if url.startswith("postgres://"):
        url = url.replace("postgres://", "postgresql://", 1)
    if url not in _engines:
        engine = create_engine(url)
        Base.metadata.create_all(engine)
        _engines[url] = engine
    return _engines[url]


def record_run(url, command, config, exit_code, summary):
    """Append one ledger row; an empty url disables the ledger."""
    if not url:
        return None
    try:
        with Session(get_engine(url)) as session:
            row = RunLog(
                command=command,
                config=json.dumps(config, sort_keys=True),
                exit_code=exit_code,
                summary=summary,
            )
            session.add(row)
            session.commit()
            return row.id
    except Exception as e:
        # the ledger never changes a command's outcome
        log.warning("run ledger unavailable (%s): %s", url, e)
        return None


def recent_runs(url, limit=50):
    with Session(get_engine(url)) as session:
        rows = session.scalars(
            select(RunLog).order_by(RunLog.created_at.desc(), RunLog.id.desc()).limit(limit)
        ).all()
        return [row.to_dict() for row in rows]
