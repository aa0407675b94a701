"""Spectral analysis of fractional Brownian covariance operators."""

__version__ = "0.1.0"
