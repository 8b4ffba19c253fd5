"""Masked B-Rep autoencoder for machining feature recognition."""

__version__ = "0.1.0"
