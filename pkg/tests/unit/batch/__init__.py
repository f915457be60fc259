"""Tests for sweep task expansion and the worker pool."""
