"""Stroboscopic weak-measurement simulator for a qubit-probed mechanical mode."""

__version__ = "0.1.0"
