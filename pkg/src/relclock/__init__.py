"""Relativistic clock-comparison simulator for space clock missions."""

__version__ = "0.1.0"
