"""HTTP face of the solver: FastAPI app plus request/response schemas."""

from .app import app

__all__ = ["app"]
