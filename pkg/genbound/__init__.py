"""genbound - exact laboratory for information-theoretic generalization bounds."""

__version__ = "0.1.0"
