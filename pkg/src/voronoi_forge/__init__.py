"""Exact-arithmetic toolkit for Voronoi regions of lattices."""

__version__ = "0.1.0"
