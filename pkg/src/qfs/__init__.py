"""qfs: quantum-annealing feature-map selection toolkit."""

__version__ = "0.1.0"
