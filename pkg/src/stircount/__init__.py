"""Counting statistics of coherent transport in driven 2- and 3-site systems."""

__version__ = "0.1.0"

from . import analytic, counting, errors, linalg, model, propagation  # noqa: F401
