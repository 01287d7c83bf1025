"""momenta: symbolic von Mises calculus for smooth functions of moments."""

__version__ = "0.1.0"
