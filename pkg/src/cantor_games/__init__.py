"""Simulator and verifier for interval-allocation games on Cantor space."""

__version__ = "0.1.0"
