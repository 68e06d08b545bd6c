"""Sup-norm and coefficient-norm machinery for homogeneous polynomials."""

__version__ = "0.1.0"
