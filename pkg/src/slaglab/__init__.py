"""Numerical laboratory for special Legendrian surfaces in S^5 and
minimal Lagrangian surfaces in CP^2."""

__version__ = "0.1.0"
