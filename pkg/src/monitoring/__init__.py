"""Resource monitoring package for benchmark sweeps."""
