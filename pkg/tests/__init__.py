"""Tests for chainmi."""
