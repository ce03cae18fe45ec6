"""Exact controls for two-point boundary value problems of wave equations."""

__version__ = "0.1.0"
