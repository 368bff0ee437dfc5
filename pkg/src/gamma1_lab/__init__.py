"""Numerical laboratory for the prime side of the Gamma_1(q) one-level density."""

__version__ = "0.1.0"
