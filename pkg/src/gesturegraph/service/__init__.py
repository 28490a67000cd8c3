"""HTTP service wrapping the pipeline; see app.py for the FastAPI application."""

from . import handlers, schemas

__all__ = ["handlers", "schemas"]
