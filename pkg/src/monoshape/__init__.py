"""Shape reconstruction of sound-soft planar scatterers from back-scatter far-field data."""

__version__ = "0.1.0"

__all__ = ["__version__"]
