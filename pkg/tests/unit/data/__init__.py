"""Tests for data package."""
