"""HTTP service wrapping the projection, simulation, and benchmark APIs."""

from .app import create_app

__all__ = ["create_app"]
