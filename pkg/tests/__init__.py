"""Tests for the market pool engine."""
