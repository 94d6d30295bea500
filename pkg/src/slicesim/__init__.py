"""Two-slice V2V network simulator with a recurrent deep-Q slicing controller."""

__version__ = "0.1.0"
