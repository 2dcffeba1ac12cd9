"""Desk-scale simulator of the Busy Beaver imitation game on time-varying graphs."""

__version__ = "0.1.0"
