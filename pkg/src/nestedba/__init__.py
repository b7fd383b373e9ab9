"""Nested algebraic Bethe ansatz toolkit for rational spin chains."""

__version__ = "0.1.0"
