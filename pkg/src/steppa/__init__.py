"""Synthetic terrain scenes, steppability masks and perception-guided foothold planning."""

__version__ = "0.1.0"
