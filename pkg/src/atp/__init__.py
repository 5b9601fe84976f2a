"""Anti-tamper perturbation toolkit."""

__version__ = "0.1.0"
