"""Pseudo-spectral simulation and bound checking for Euler-type SPDE schemes."""

__version__ = "0.1.0"
