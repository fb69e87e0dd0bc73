"""Exact and heuristic tools for bounding Grothendieck constants."""

__version__ = "0.1.0"
