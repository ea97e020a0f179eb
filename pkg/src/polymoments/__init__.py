"""Polymoments - exact moment varieties of uniform polytope measures."""

__version__ = "0.1.0"
