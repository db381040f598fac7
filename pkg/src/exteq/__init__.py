"""Equation systems over central extensions of hyperbolic groups."""

__version__ = "0.1.0"
