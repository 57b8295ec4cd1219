"""Deflation of isolated singular roots of polynomial systems."""
__version__ = "0.1.0"
