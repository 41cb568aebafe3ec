"""Integral and derivative operators with respect to kernel-functions."""
