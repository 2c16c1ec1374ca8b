"""Differentiable cell-based architecture search for speaker-recognition CNNs."""

__version__ = "0.1.0"
