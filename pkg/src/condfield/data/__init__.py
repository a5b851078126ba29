"""Shipped tissue conductivity tables."""
