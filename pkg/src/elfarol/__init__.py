"""Spatial El Farol Bar simulator with pluggable agent brains and trace analysis."""

__version__ = "0.1.0"
