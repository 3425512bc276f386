"""Spectral laboratory for doubly dissipative elastic waves."""

__version__ = "1.0.0"
