"""
Run ledger for CPWalk (using Flask-SQLAlchemy).

Every CLI run, including failed ones, leaves one `Run` row: what was run,
with which seed, how it ended and where its outputs went.  The outputs
themselves stay on disk.
"""

from __future__ import annotations

from datetime import datetime

from flask import Flask
from flask_sqlalchemy import SQLAlchemy
from sqlalchemy import JSON, DateTime, Float, Integer, String, Text
from sqlalchemy.orm import Mapped, mapped_column
from sqlalchemy.sql import func

# SQLAlchemy instance, initialized in app.py
db = SQLAlchemy()

RUN_STATUSES = ("ok", "inconclusive", "aborted", "failed")


class Run(db.Model):
    """One invocation of an estimator subcommand."""

    __tablename__ = "runs"

    id: Mapped[int] = mapped_column(Integer, primary_key=True)
    name: Mapped[str] = mapped_column(String(255), nullable=False, index=True)
    subcommand: Mapped[str] = mapped_column(String(50), nullable=False, index=True)
    # 64-bit seeds do not fit a signed BIGINT; stored as text.
    seed: Mapped[str] = mapped_column(String(20), nullable=False)
    replicas: Mapped[int] = mapped_column(Integer, nullable=False)
    threads: Mapped[int] = mapped_column(Integer, nullable=False, default=1)
    status: Mapped[str] = mapped_column(String(20), nullable=False, default="ok")
    exit_code: Mapped[int] = mapped_column(Integer, nullable=False, default=0)
    aborted: Mapped[int] = mapped_column(Integer, nullable=False, default=0)
    config: Mapped[dict] = mapped_column(JSON, nullable=False, default=dict)
    report: Mapped[dict] = mapped_column(JSON, nullable=True)
    message: Mapped[str] = mapped_column(Text, nullable=True)
    output_dir: Mapped[str] = mapped_column(Text, nullable=True)
    wall_seconds: Mapped[float] = mapped_column(Float, nullable=True)
    created_at: Mapped[datetime] = mapped_column(DateTime(timezone=True), server_default=func.now())

    def to_dict(self, full: bool = False) -> dict:
        data = {
            "id": self.id,
            "name": self.name,
            "subcommand": self.subcommand,
            "seed": int(self.seed),
            "replicas": self.replicas,
            "threads": self.threads,
            "status": self.status,
            "exit_code": self.exit_code,
            "aborted": self.aborted,
            "message": self.message,
            "output_dir": self.output_dir,
            "wall_seconds": self.wall_seconds,
            "created_at": self.created_at.isoformat() if self.created_at else None,
        }
        if full:
            data["config"] = self.config
            data["report"] = self.report
        return data


def status_for(exit_code: int) -> str:
    return {0: "ok", 3: "inconclusive", 4: "aborted"}.get(exit_code, "failed")


def init_app(app: Flask) -> None:
    """
    Initializes the SQLAlchemy extension with the given Flask app
    and registers the 'init-db' CLI command.
    """
    db.init_app(app)

    @app.cli.command("init-db")
    def init_db_command():
        """Creates the database tables."""
        db.create_all()
        print("Database initialized.")
