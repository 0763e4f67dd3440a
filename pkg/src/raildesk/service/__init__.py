"""Service process: orchestrator, HTTP API, CLI."""

from .app import Orchestrator, RunConfig, create_app

__all__ = ["Orchestrator", "RunConfig", "create_app"]
