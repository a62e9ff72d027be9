"""Shared-randomness compression for classical communication networks."""

__version__ = "0.1.0"
