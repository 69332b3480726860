"""Numerical laboratory for q-Gaussian algebras, their crossed products and torus rigidity."""
__version__ = "0.1.0"
