"""Tests for polymoments."""
