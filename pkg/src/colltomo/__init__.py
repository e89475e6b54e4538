"""Collective quantum tomography: closed-form pipelines, SOS lower bounds,
and a Monte Carlo benchmarking harness."""

__version__ = "0.1.0"
