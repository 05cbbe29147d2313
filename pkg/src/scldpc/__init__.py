"""Density evolution, EXIT curves and fixed points for coupled LDPC ensembles on the BEC."""

__version__ = "0.1.0"
