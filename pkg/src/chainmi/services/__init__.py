"""Numerical services for chainmi."""
