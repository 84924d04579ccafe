"""Noncontextuality bounds for anomalous weak values: schemes, bounds, ontic models and polytopes."""

from . import bounds, onticmodels, polytope, qmath, schemes

__all__ = ["bounds", "onticmodels", "polytope", "qmath", "schemes"]
__version__ = "0.1.0"
