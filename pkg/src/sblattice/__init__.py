"""Finite-gap solutions of the stationary Szegő-Baxter lattice hierarchy."""

__version__ = "0.1.0"
