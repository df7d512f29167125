"""BA-GMRES benchmark harness - experiment runner and command-line interface."""

__version__ = "0.1.0"
