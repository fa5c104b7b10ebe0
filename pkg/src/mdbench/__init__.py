"""mdbench: a multi-domain (chess + code) text-to-text evaluation harness."""

__version__ = "0.1.0"
