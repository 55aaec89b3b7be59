"""revsignal: code-review participation and feedback prediction toolkit."""

__version__ = "0.1.0"
