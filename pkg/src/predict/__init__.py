"""Prediction, membership probabilities and X-Predictability for fitted models."""
