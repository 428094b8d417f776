"""Numerical toolkit for the asymptotic large sieve over primitive Dirichlet characters."""

__version__ = "0.1.0"
