"""Numerical laboratory for distance functions and Chebyshev sets in
finite-dimensional normed spaces."""

__version__ = "0.1.0"
