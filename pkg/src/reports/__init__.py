"""
Sweep report generation.

Long-form results, per-cell aggregates, plot-data panels and the binned
resolvability-versus-accuracy table written by benchmark sweeps.
"""
