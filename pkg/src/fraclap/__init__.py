"""fraclap: contour-quadrature Laplace inversion for fractional beam models."""

__version__ = "0.1.0"
