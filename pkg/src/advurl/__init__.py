"""Malicious advertisement URL detection with tree ensembles and ZOO black-box attacks."""

__version__ = "0.1.0"
