"""Spatio-temporal trip analysis, similarity scoring, ride matching, and fleet scheduling."""

__version__ = "0.1.0"
