"""Tests for predict package."""
