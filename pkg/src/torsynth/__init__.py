"""Synthetic encrypted-traffic generation and privacy/utility evaluation."""

__version__ = "0.1.0"
