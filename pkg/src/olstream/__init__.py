"""Exact online convolution and multiplication engines with a cell-probe lab."""

__version__ = "0.1.0"
