"""Routing and appointment scheduling under random service and travel times."""

__version__ = "0.1.0"
