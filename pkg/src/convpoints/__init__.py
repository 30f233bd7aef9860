"""Desk-scale laboratory for convergence points of random power series on the circle."""

__version__ = "0.1.0"
