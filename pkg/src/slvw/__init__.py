"""Electron dynamics in structured intense laser fields (structured-light Volkov waves)."""

__version__ = "0.1.0"
