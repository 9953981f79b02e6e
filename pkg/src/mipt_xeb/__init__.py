"""Monitored Clifford circuits, cross-entropy benchmarking and data collapse."""

__version__ = "0.1.0"
