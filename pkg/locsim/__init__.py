"""Simulating local operations on pure multipartite states."""

__version__ = "0.1.0"
