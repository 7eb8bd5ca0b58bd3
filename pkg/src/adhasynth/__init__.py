"""Synthesis of hybrid automata with affine dynamics from time series."""

__version__ = "0.1.0"
