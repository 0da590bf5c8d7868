"""Desk-scale experiments on the sample cost of quantum error mitigation."""
__version__ = "0.1.0"
