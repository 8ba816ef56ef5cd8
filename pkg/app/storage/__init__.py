"""Flat-file input and output."""
