"""Entanglement-guided ansatz construction and VQE for small spin-orbital Hamiltonians."""

__version__ = "0.1.0"
FORMAT_VERSION = "1"

__all__ = ["__version__", "FORMAT_VERSION"]
