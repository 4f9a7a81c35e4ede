"""Fuzzy rule interpolation based DDoS detection."""
__version__ = "0.1.0"
