"""Schottky groups, Sunada covers and truncated Selberg zeta zeros."""

__version__ = "0.1.0"
