"""Reconfigurable boundary modulation in reverberant cavities."""

__version__ = "0.1.0"
