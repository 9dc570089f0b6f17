"""Adherence analytics and visit-planning engine over call-based dose data."""

__version__ = "0.1.0"
