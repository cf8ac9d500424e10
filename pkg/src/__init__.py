"""Complex Geometric Structurization (CGS) toolkit."""

__version__ = "1.0.0"
