"""Fabry-Perot microcavity design and analysis toolkit."""
