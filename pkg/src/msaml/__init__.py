"""Supervised metric learning of beat-synchronous features for music structure analysis."""

__version__ = "0.1.0"
