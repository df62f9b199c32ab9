"""Benchmarking NILM disaggregators on real versus denoised aggregates."""

__version__ = "0.1.0"
