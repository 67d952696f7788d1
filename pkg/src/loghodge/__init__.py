"""Logarithmic Hodge numbers of toric degenerations from polytope data."""

__version__ = "0.1.0"
