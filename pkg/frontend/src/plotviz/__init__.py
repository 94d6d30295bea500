"""Static figure rendering for the slicing simulator's CSV outputs."""

__version__ = "0.1.0"
