"""Benchmarking toolkit for dynamical decoupling sequences."""

__version__ = "0.1.0"
