"""CPWalk: Monte Carlo engine for random walks on the contact process."""

from .app import create_app

__all__ = ["create_app"]
