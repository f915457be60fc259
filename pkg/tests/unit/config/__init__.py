"""Tests for sweep configuration and CLI argument validation."""
