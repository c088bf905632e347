"""Spectral Galerkin solver for a nonlinear acoustics system on boxes."""

__version__ = "0.1.0"
