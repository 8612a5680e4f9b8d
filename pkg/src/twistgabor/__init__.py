"""Twisted time-frequency analysis on L^2(C)."""

__version__ = "0.1.0"
