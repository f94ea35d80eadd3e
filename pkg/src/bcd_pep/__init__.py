"""Cyclic block coordinate descent, its worst-case bounds and their dual certificate."""

__version__ = "0.1.0"
