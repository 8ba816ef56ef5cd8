"""Optics, loss, spectrum and surface computations."""
