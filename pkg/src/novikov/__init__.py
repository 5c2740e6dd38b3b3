"""Exact Morse/Novikov chain-complex constructions with a discrete Morse oracle."""

__version__ = "0.1.0"
