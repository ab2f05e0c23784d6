"""Smoke tests for the CPWalk Flask application."""

import logging
import os
from unittest.mock import patch

from app import create_app


def test_create_app() -> None:
    app = create_app({"TESTING": True})

    assert app.testing is True
    assert app.url_map is not None


def test_blueprints_registered() -> None:
    """Test that all expected blueprints are registered."""
    app = create_app({"TESTING": True})

    blueprint_names = list(app.blueprints.keys())

    assert "health" in blueprint_names, "Health blueprint should be registered"
    assert "runs_api" in blueprint_names, "Runs API blueprint should be registered"


def test_health_endpoint() -> None:
    """Test that the health endpoint works correctly."""
    app = create_app({"TESTING": True})
    client = app.test_client()

    response = client.get("/health")
    assert response.status_code == 200
    assert response.json == {"status": "ok"}


def test_database_uri_from_env() -> None:
    """Test that DATABASE_URL is loaded from environment variable."""
    with patch.dict(os.environ, {"DATABASE_URL": "sqlite:///test.db"}):
        app = create_app()
        assert app.config["SQLALCHEMY_DATABASE_URI"] == "sqlite:///test.db"


def test_defaults_without_environment() -> None:
    """Database, worker count, output root and log level fall back when nothing is set."""
    with patch.dict(os.environ, {}, clear=True):
        # .env must not be read either
        with patch('app.app.load_dotenv'):
            app = create_app()
            assert app.config["SQLALCHEMY_DATABASE_URI"] == "sqlite:///cpwalk.db"
            assert app.config["CPWALK_THREADS"] == 1
            assert app.config["CPWALK_OUTPUT_ROOT"] == "runs"
            assert app.config["CPWALK_LOG_LEVEL"] == "INFO"


def test_engine_settings_from_env() -> None:
    env = {"CPWALK_THREADS": "4", "CPWALK_OUTPUT_ROOT": "/tmp/cpwalk-runs", "CPWALK_LOG_LEVEL": "debug"}
    with patch.dict(os.environ, env):
        app = create_app()
        assert app.config["CPWALK_THREADS"] == 4
        assert app.config["CPWALK_OUTPUT_ROOT"] == "/tmp/cpwalk-runs"
        assert logging.getLogger().level == logging.DEBUG
    logging.getLogger().setLevel(logging.INFO)


def test_config_parameter_overrides_env() -> None:
    """Test that config parameter can override environment variables."""
    with patch.dict(os.environ, {"CPWALK_THREADS": "8"}):
        app = create_app({"CPWALK_THREADS": 2})
        assert app.config["CPWALK_THREADS"] == 2


def test_cli_commands_registered() -> None:
    app = create_app({"TESTING": True})

    for name in ("init-db", "speed", "subadd", "coupling", "conemix", "slab", "edge", "critical", "cluster"):
        assert name in app.cli.commands, f"{name} should be registered"


def test_unknown_route_is_404() -> None:
    app = create_app({"TESTING": True})
    client = app.test_client()

    assert client.get("/api/runs/latest").status_code == 404
