"""Transition kernels, dyadic Brownian motion and Kolmogorov-Chentsov checks."""

__version__ = "0.1.0"
