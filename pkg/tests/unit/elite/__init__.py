"""Tests for elite package."""
