"""cubesieve: descent, sieving, and verification for the nine-cube equation."""

__version__ = "0.1.0"
