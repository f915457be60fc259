"""Tests for regression package."""
