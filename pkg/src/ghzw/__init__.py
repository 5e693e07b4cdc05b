"""Witnesses of genuine LOSR multipartite nonlocality for noisy GHZ states."""

__version__ = "0.1.0"
