"""Cusp spaces, boundary flags and reparameterized flows for matrix groups."""

__version__ = "0.1.0"
