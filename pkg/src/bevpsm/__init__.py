"""Capacity expansion LP with individually scaled BEV profiles."""

__version__ = "0.1.0"
