"""Tests for per-task resource monitoring."""
