"""Projection algorithm for variational inequalities over product sets.

Solves VI(U, F): find x in U with <F(x), z - x> >= 0 for all z in U, by
iterating x <- Proj_U(x - tau F(x)). For a rho-strongly monotone and
L-Lipschitz operator the iteration contracts for tau < 2 rho / L^2, with
the best distance contraction sqrt(1 - (rho/L)^2) at tau = rho / L^2.

The weighting matrix attached to a problem only affects how residuals and
distances are measured; projections stay Euclidean, which is valid for the
structured weight class (full block on free coordinates, diagonal on box
coordinates, identity on general blocks).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .numlin import weighted_norm
from .problem import FeasibleSet

__all__ = [
    "VIProblem",
    "SolveReport",
    "StepRule",
    "projection_step",
    "fixed_point_residual",
    "solve_vi",
    "recommend_step",
]

_DIVERGENCE_FACTOR = 1e12


@dataclass(frozen=True, eq=False)
class VIProblem:
    """Operator F, feasible set, and an optional SPD residual weighting."""

    operator: Callable[[np.ndarray], np.ndarray]
    feasible_set: FeasibleSet
    weight: np.ndarray | None = None


@dataclass
class SolveReport:
    """Outcome of a projection-algorithm run.

    Non-convergence is reported through ``converged``/``status`` rather
    than raised, so deliberately unstable runs keep their residual trace.
    """

    solution: np.ndarray
    iterations: int
    residuals: np.ndarray
    contraction_estimate: float
    converged: bool
    status: str

    def to_csv(self, path) -> None:
        """Residual history, with the solution coordinates on the final row."""
        n = self.solution.size
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iteration", "residual"]
                            + [f"x_{i}" for i in range(n)])
            for k, r in enumerate(self.residuals):
                tail = ([repr(float(v)) for v in self.solution]
                        if k == self.residuals.size - 1 else [""] * n)
                writer.writerow([k, repr(float(r))] + tail)


def projection_step(prob: VIProblem, x, tau: float) -> np.ndarray:
    """One step x -> Proj_U(x - tau F(x))."""
    if not tau > 0:
        raise ValueError("tau must be positive")
    v = np.asarray(x, dtype=float).ravel()
    return prob.feasible_set.project(v - tau * np.asarray(prob.operator(v), dtype=float))


def fixed_point_residual(prob: VIProblem, x, tau: float) -> float:
    """Weighted norm of x - Proj_U(x - tau F(x)); zero iff x solves the VI."""
    v = np.asarray(x, dtype=float).ravel()
    return weighted_norm(v - projection_step(prob, v, tau), prob.weight)


def _contraction_estimate(residuals: np.ndarray) -> float:
    """Geometric-mean ratio of the last max(10, 10%) residual pairs."""
    r = residuals[residuals > 0]
    if r.size < 2:
        return float("nan")
    k = max(10, int(np.ceil(0.1 * r.size)))
    tail = r[-(k + 1):]
    ratios = tail[1:] / tail[:-1]
    return float(np.exp(np.mean(np.log(ratios))))


def solve_vi(prob: VIProblem, tau: float, tol: float = 1e-10,
             max_iter: int = 100_000, x0=None) -> SolveReport:
    """Run the projection algorithm until the fixed-point residual <= tol.

    Stops on residual, not cost decrease: the object of interest is the VI
    solution. Divergence (residual blow-up or non-finite iterates) ends the
    run early with ``status='diverged'``.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    n = prob.feasible_set.dim
    x = prob.feasible_set.project(np.zeros(n) if x0 is None
                                  else np.asarray(x0, dtype=float).ravel())
    residuals = []
    converged = False
    status = "max_iter"
    for _ in range(max_iter):
        xn = projection_step(prob, x, tau)
        r = weighted_norm(x - xn, prob.weight)
        residuals.append(r)
        x = xn
        if not np.all(np.isfinite(x)) or (
                len(residuals) > 1 and r > _DIVERGENCE_FACTOR * (1.0 + residuals[0])):
            status = "diverged"
            break
        if r <= tol:
            converged = True
            status = "converged"
            break
    res = np.asarray(residuals)
    return SolveReport(solution=x, iterations=len(residuals), residuals=res,
                       contraction_estimate=_contraction_estimate(res),
                       converged=converged, status=status)


@dataclass(frozen=True)
class StepRule:
    """Step-size recommendation for a rho-strongly monotone, L-Lipschitz VI."""

    tau_star: float
    tau_max: float
    rate: float


def recommend_step(rho: float, L: float) -> StepRule:
    """Best step tau* = rho/L^2, stability bound 2 rho/L^2, rate 1-(rho/L)^2."""
    if not (rho > 0 and L > 0):
        raise ValueError("rho and L must be positive")
    if rho > L:
        raise ValueError(f"rho={rho} exceeds L={L}")
    return StepRule(tau_star=rho / L**2, tau_max=2.0 * rho / L**2,
                    rate=1.0 - (rho / L) ** 2)
