"""Accuracy, resolvability and predictability metrics for CLR models."""
