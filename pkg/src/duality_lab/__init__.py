"""Exact verification of orthogonal-polynomial dualities for interacting particle systems."""

__version__ = "0.1.0"
