"""Tests for proposals package."""
