"""Toolkit for measuring how well text-embedding geometry tracks perceptual
color geometry, and for probing comparative relations between color
descriptions."""

__version__ = "0.1.0"
