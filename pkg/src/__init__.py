"""
Clusterwise Regression Toolkit
EM and EM_is engines, resolvability and accuracy metrics, prediction and
benchmark sweeps.
"""

__version__ = "1.0.0"
