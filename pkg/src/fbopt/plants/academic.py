"""Two-input two-output nonlinear benchmark plant with analytic Jacobian.

    y1 = u1 + u2
    y2 = w1 sin(u1) - u1 + w2 cos(u2) + u2

For disturbances w in [0, 1]^2 the input Jacobian has first row (1, 1) and
second row (w1 cos(u1) - 1, 1 - w2 sin(u2)), so its entries range over
[-2, 0] and [0, 2]: the Jacobian stays inside an explicitly known matrix
polytope no matter where the plant is operated.
"""

from __future__ import annotations

import numpy as np

__all__ = ["AcademicPlant"]


class AcademicPlant:
    """Fixed functional form; stateless and safe to share."""

    n = 2
    m = 2
    p = 2

    def evaluate(self, u, w) -> np.ndarray:
        u = np.asarray(u, dtype=float).ravel()
        w = np.asarray(w, dtype=float).ravel()
        return np.array([
            u[0] + u[1],
            w[0] * np.sin(u[0]) - u[0] + w[1] * np.cos(u[1]) + u[1],
        ])

    def jacobian(self, u, w) -> np.ndarray:
        u = np.asarray(u, dtype=float).ravel()
        w = np.asarray(w, dtype=float).ravel()
        return np.array([
            [1.0, 1.0],
            [w[0] * np.cos(u[0]) - 1.0, 1.0 - w[1] * np.sin(u[1])],
        ])

    @staticmethod
    def jacobian_vertices() -> list[np.ndarray]:
        """Corners of the Jacobian range over u in R^2, w in [0,1]^2."""
        return [np.array([[1.0, 1.0], [a, b]])
                for a, b in ((0.0, 0.0), (0.0, 2.0), (-2.0, 2.0), (-2.0, 0.0))]
