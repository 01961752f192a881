"""Influence maximization on growing networks with learned growth and edge weights."""

__version__ = "0.1.0"
