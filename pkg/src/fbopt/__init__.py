"""Feedback-based online optimization with robust-stability certification.

The package implements a measurement-driven projected gradient controller
together with the machinery to certify, ahead of deployment, that the
closed loop contracts to its unique consistent operating point for every
plant in a modeled uncertainty class: matrix-polytope and linear-fractional
Jacobian uncertainty sets, multiplier cones, a verified semidefinite
feasibility engine, benchmark plants, and closed-loop experiment runners.
"""

__version__ = "0.1.0"

from . import certify, lmi, numlin, plants, problem, sim, uncertainty, vi

__all__ = [
    "numlin",
    "problem",
    "vi",
    "uncertainty",
    "lmi",
    "certify",
    "plants",
    "sim",
    "__version__",
]
