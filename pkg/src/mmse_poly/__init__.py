"""Polynomial approximation of the MMSE estimator E[X|Y] for Y = X + N(0, 1)."""

__version__ = "0.1.0"
