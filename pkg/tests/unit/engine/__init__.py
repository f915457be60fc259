"""Tests for engine package."""
