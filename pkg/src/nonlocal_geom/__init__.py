"""Nonlocal perimeters, principal-value nonlocal curvatures and density verifiers."""
__version__ = "0.1.0"
