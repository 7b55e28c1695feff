"""Experiments on the largest prime factor P(n) and the sums beta(n), B(n), B1(n)."""

__version__ = "0.1.0"
