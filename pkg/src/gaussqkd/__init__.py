"""Efficiency of entanglement-based key distribution with two-mode Gaussian states."""

__version__ = "0.1.0"
