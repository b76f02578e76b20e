"""Flexible faster-than-Nyquist OTFS link simulator for LEO satellite channels."""

__version__ = "0.1.0"

from .core import ConfigurationError, DomainError, FrameConfig, NumericalError, demap_symbols, map_bits  # noqa: E402

__all__ = ["__version__", "ConfigurationError", "DomainError", "NumericalError", "FrameConfig", "map_bits",
           "demap_symbols"]
