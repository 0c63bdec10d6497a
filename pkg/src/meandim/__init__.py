"""Finite-scale entropy and mean dimension laboratory for Z^k actions."""

__version__ = "0.1.0"
