"""Deterministic energy harvesting from random-phase sinusoidal sources."""

__version__ = "0.1.0"
