"""Radial solver for vortex stationary states of the gauged planar Schrodinger equation."""

__version__ = "0.1.0"
