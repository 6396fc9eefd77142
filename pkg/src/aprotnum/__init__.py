"""Rotation numbers of Schrödinger operators with almost periodic potentials and delta-interactions."""

__version__ = "0.1.0"
