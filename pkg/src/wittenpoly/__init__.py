"""Witten-deformed de Rham complexes of polynomial Morse functions on R^n."""

__version__ = "0.1.0"
