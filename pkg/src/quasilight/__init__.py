"""Localized-mode simulation of light propagation, noise and detection."""

__version__ = "0.1.0"
