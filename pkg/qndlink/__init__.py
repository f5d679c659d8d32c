"""qndlink — Gaussian simulation of quantum non-demolition coupling at a distance."""

__version__ = "0.1.0"
