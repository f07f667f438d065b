"""Simulator for a coarse-grained random access code with sequential qubit measurements."""

__version__ = "0.1.0"
