"""Controlled graph-classification benchmark of node-embedding constructions."""

__version__ = "0.1.0"
