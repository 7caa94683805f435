"""Community engagement data service with citation traceability."""

__version__ = "0.1.0"
