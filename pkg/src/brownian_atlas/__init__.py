"""Discretized Brownian maps and planes built from the Brownian snake."""

__version__ = "0.1.0"
