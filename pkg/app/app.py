"""Flask application factory for CPWalk."""

from __future__ import annotations

import logging
import os
from typing import Any

from dotenv import load_dotenv
from flask import Flask

from .blueprints import register_blueprints
from .cli import register_commands
from .database import init_app as init_database

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(level: str) -> None:
    """Root logging for the process; warnings from the estimators go through it too."""
    logging.basicConfig(level=level.upper(), format=LOG_FORMAT)
    logging.getLogger().setLevel(level.upper())
    logging.captureWarnings(True)


def create_app(config: dict[str, Any] | None = None) -> Flask:
    """Create and configure the Flask application instance."""
    load_dotenv()

    app = Flask(__name__, instance_relative_config=False)

    # Načte URL databáze z .env, a pokud tam není, použije lokální sqlite
    app.config["SQLALCHEMY_DATABASE_URI"] = os.getenv("DATABASE_URL", "sqlite:///cpwalk.db")
    app.config["SQLALCHEMY_TRACK_MODIFICATIONS"] = False

    # Počet procesů pro repliky, kořen výstupů a úroveň logování
    app.config["CPWALK_THREADS"] = int(os.getenv("CPWALK_THREADS", "1"))
    app.config["CPWALK_OUTPUT_ROOT"] = os.getenv("CPWALK_OUTPUT_ROOT", "runs")
    app.config["CPWALK_LOG_LEVEL"] = os.getenv("CPWALK_LOG_LEVEL", "INFO")

    if config:
        app.config.update(config)

    configure_logging(app.config["CPWALK_LOG_LEVEL"])
    init_database(app)
    register_blueprints(app)
    register_commands(app)

    return app


def main() -> None:
    """Entry point for the read-only runs API (development server)."""
    app = create_app()
    app.run(host="0.0.0.0", port=int(os.getenv("PORT", "5000")), debug=True)


if __name__ == "__main__":
    main()
