"""Desk-scale simulators for oblivious state preparation and its applications."""

__version__ = "0.1.0"
