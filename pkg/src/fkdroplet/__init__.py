"""Subcritical FK random cluster simulation and circuit-regularity analysis."""

__version__ = "0.1.0"
