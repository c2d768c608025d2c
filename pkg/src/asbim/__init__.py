"""Attention-based sequential behavior interaction model for dyadic data."""

__version__ = "0.1.0"
