"""Quantum Fisher information limits for Lindblad-encoded dissipation."""

__version__ = "0.1.0"
