"""Batch processing package for benchmark sweeps."""
