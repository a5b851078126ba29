"""Test suite."""

