"""Sparse and dyadic domination of Calderón–Zygmund operators, numerically."""

__version__ = "0.1.0"
