"""Harmonic analysis of iterated function systems with overlap."""

__version__ = "0.1.0"
