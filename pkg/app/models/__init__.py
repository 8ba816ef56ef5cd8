"""Domain models and request/report schemas."""
