"""Answer- and timestamp-aware quiz question generation from lecture recordings."""

__version__ = "0.1.0"
