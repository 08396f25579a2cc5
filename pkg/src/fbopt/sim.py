"""Closed-loop experiment runners and comparison metrics.

Two feedback algorithms share the same loop shape: measure the plant,
form a search direction, take a projected step, apply. The measurement-
driven runner uses only the fixed sensitivity model Pi and never touches a
plant Jacobian; the exact-gradient runner evaluates the true Jacobian at
every step and serves as the full-information baseline. Constant-
disturbance scenarios stop on the fixed-point residual; time-series
scenarios take exactly one algorithm step per data sample, mirroring an
online deployment loop.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .numlin import weighted_norm
from .problem import (ProblemSpec, approx_gradient, grad_f, grad_g,
                      objective_value, soft_threshold)
from .vi import VIProblem, solve_vi

__all__ = [
    "Scenario",
    "SimTrace",
    "run_oag",
    "run_gd_true",
    "run_uncontrolled",
    "feedforward_baseline",
    "compare",
    "cluster_endpoints",
]

CLUSTER_THRESHOLD = 0.1


@dataclass(frozen=True, eq=False)
class Scenario:
    """One closed-loop experiment definition.

    Exactly one of ``w`` (constant disturbance) or ``w_series`` (rows are
    per-step disturbances) must be given. The starting input must be
    feasible; every later iterate is feasible by projection.
    """

    plant: object
    problem: ProblemSpec
    tau: float
    u_start: np.ndarray
    w: np.ndarray | None = None
    w_series: np.ndarray | None = None
    horizon: int = 10_000
    tol: float = 1e-9
    weight: np.ndarray | None = None

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if (self.w is None) == (self.w_series is None):
            raise ValueError("give exactly one of w or w_series")
        u0 = np.asarray(self.u_start, dtype=float).ravel()
        if not self.problem.feasible_set.contains(u0, tol=1e-9):
            raise ValueError("u_start is not feasible")
        object.__setattr__(self, "u_start", u0)
        if self.w is not None:
            object.__setattr__(self, "w", np.asarray(self.w, dtype=float).ravel())
        else:
            W = np.asarray(self.w_series, dtype=float)
            if W.ndim != 2:
                raise ValueError("w_series must be 2-d (steps x dim)")
            object.__setattr__(self, "w_series", W)

    def disturbance(self, k: int) -> np.ndarray:
        return self.w if self.w is not None else self.w_series[k]

    def steps(self) -> int:
        return self.horizon if self.w is not None else self.w_series.shape[0]


@dataclass
class SimTrace:
    """Per-step records of one closed-loop run.

    ``u`` has one more row than ``y``: the last row is the input produced by
    the final update (the endpoint). ``violation`` is sum_i s_i(y_k)^2 per
    step. A plant failure truncates the trace and sets ``status``.
    """

    algorithm: str
    u: np.ndarray
    y: np.ndarray
    residuals: np.ndarray
    objective: np.ndarray
    violation: np.ndarray
    status: str

    @property
    def endpoint(self) -> np.ndarray:
        return self.u[-1]

    @property
    def violation_integral(self) -> float:
        return float(np.sum(self.violation))

    @property
    def max_violation(self) -> float:
        return 0.0 if self.violation.size == 0 else float(np.max(self.violation))

    def to_csv(self, path) -> None:
        n = self.u.shape[1]
        m = self.y.shape[1] if self.y.size else 0
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["k", "residual", "objective", "violation"]
                            + [f"u_{i}" for i in range(n)]
                            + [f"y_{j}" for j in range(m)])
            for k in range(self.y.shape[0]):
                writer.writerow(
                    [k, repr(float(self.residuals[k])), repr(float(self.objective[k])),
                     repr(float(self.violation[k]))]
                    + [repr(float(v)) for v in self.u[k]]
                    + [repr(float(v)) for v in self.y[k]])


def _violation(problem: ProblemSpec, y: np.ndarray) -> float:
    o = problem.objective
    if o.y_lower is None:
        return 0.0
    s = soft_threshold(y, o.y_lower, o.y_upper)
    return float(s @ s)


def _run_loop(sc: Scenario, direction, algorithm: str) -> SimTrace:
    fset = sc.problem.feasible_set
    u = sc.u_start.copy()
    us, ys, res, obj, vio = [], [], [], [], []
    status = "completed"
    stop_on_residual = sc.w is not None
    for k in range(sc.steps()):
        w = sc.disturbance(k)
        try:
            y = np.asarray(sc.plant.evaluate(u, w), dtype=float)
        except Exception as exc:  # plant failure: truncate, keep the trace
            status = f"plant_failure at step {k}: {exc}"
            break
        d = direction(u, y, w)
        u_next = fset.project(u - sc.tau * d)
        r = weighted_norm(u - u_next, sc.weight)
        us.append(u.copy())
        ys.append(y)
        res.append(r)
        obj.append(objective_value(sc.problem.objective, u, y))
        vio.append(_violation(sc.problem, y))
        u = u_next
        if not np.all(np.isfinite(u)):
            status = f"diverged at step {k}"
            break
        if stop_on_residual and r <= sc.tol:
            status = "converged"
            break
    us.append(u.copy())
    return SimTrace(algorithm=algorithm, u=np.asarray(us), y=np.asarray(ys),
                    residuals=np.asarray(res), objective=np.asarray(obj),
                    violation=np.asarray(vio), status=status)


def run_oag(sc: Scenario) -> SimTrace:
    """Measurement-driven projected gradient: only Pi and measured outputs.

    The plant's Jacobian interface is never called.
    """
    o, mdl = sc.problem.objective, sc.problem.model

    def direction(u, y, w):
        return approx_gradient(o, mdl, u, y)

    return _run_loop(sc, direction, "oag")


def run_gd_true(sc: Scenario) -> SimTrace:
    """Exact-gradient projected descent using the plant Jacobian."""
    o = sc.problem.objective

    def direction(u, y, w):
        J = np.asarray(sc.plant.jacobian(u, w), dtype=float)
        return grad_f(o, u) + J.T @ grad_g(o, y)

    return _run_loop(sc, direction, "gd_true")


def run_uncontrolled(sc: Scenario, u_fixed) -> SimTrace:
    """Hold the input fixed and record outputs and violations."""
    u_fixed = np.asarray(u_fixed, dtype=float).ravel()
    ys, obj, vio = [], [], []
    status = "completed"
    for k in range(sc.steps()):
        try:
            y = np.asarray(sc.plant.evaluate(u_fixed, sc.disturbance(k)), dtype=float)
        except Exception as exc:
            status = f"plant_failure at step {k}: {exc}"
            break
        ys.append(y)
        obj.append(objective_value(sc.problem.objective, u_fixed, y))
        vio.append(_violation(sc.problem, y))
    steps = len(ys)
    return SimTrace(algorithm="uncontrolled",
                    u=np.tile(u_fixed, (steps + 1, 1)),
                    y=np.asarray(ys), residuals=np.zeros(steps),
                    objective=np.asarray(obj), violation=np.asarray(vio),
                    status=status)


def feedforward_baseline(problem: ProblemSpec, w_hat=None, tol: float = 1e-9,
                         max_iter: int = 200_000) -> np.ndarray:
    """Solve the convex surrogate with y replaced by the linear model.

    Uses y = Pi u + Pi_w w_hat (offset dropped when no disturbance model is
    available) and runs the projection algorithm on the surrogate gradient
    to the requested residual. This is the open-loop answer an operator
    would compute from the model alone.
    """
    o, mdl, fset = problem.objective, problem.model, problem.feasible_set
    offset = np.zeros(mdl.m)
    if mdl.Pi_w is not None and w_hat is not None:
        offset = mdl.Pi_w @ np.asarray(w_hat, dtype=float).ravel()

    def operator(u):
        return approx_gradient(o, mdl, u, mdl.Pi @ u + offset)

    # crude curvature bounds for a safe surrogate step size
    lip = float(np.linalg.norm(o.H, 2))
    pi_norm = np.linalg.norm(mdl.Pi, 2)
    lip += o.eta * pi_norm**2
    if o.Q2 is not None:
        lip += float(np.linalg.norm(o.Q2, 2)) * pi_norm**2
    report = solve_vi(VIProblem(operator, fset), tau=1.0 / max(lip, 1e-12),
                      tol=tol, max_iter=max_iter, x0=fset.project(np.zeros(fset.dim)))
    if not report.converged:
        raise RuntimeError(
            f"feedforward surrogate did not converge ({report.status}, "
            f"residual {report.residuals[-1]:.3e})")
    return report.solution


def cluster_endpoints(points: Sequence[np.ndarray],
                      threshold: float = CLUSTER_THRESHOLD) -> list[list[int]]:
    """Single-linkage clusters: connected components of the threshold graph."""
    pts = [np.asarray(p, dtype=float).ravel() for p in points]
    n = len(pts)
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i in range(n):
        for j in range(i + 1, n):
            if np.linalg.norm(pts[i] - pts[j]) <= threshold:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values(), key=lambda g: g[0])


def compare(traces: Mapping[str, SimTrace] | Sequence[SimTrace],
            feedforward: np.ndarray | None = None,
            cluster_threshold: float = CLUSTER_THRESHOLD) -> dict:
    """Violation metrics, endpoint clusters per algorithm, and distances to
    an optional feedforward point."""
    if isinstance(traces, Mapping):
        items = list(traces.items())
    else:
        items = [(f"{tr.algorithm}_{i}", tr) for i, tr in enumerate(traces)]
    per_trace = {}
    by_algorithm: dict[str, list[np.ndarray]] = {}
    for name, tr in items:
        per_trace[name] = {
            "algorithm": tr.algorithm,
            "max_violation": tr.max_violation,
            "violation_integral": tr.violation_integral,
            "endpoint": tr.endpoint.tolist(),
            "status": tr.status,
        }
        if feedforward is not None:
            per_trace[name]["distance_to_feedforward"] = float(
                np.linalg.norm(tr.endpoint - np.asarray(feedforward, dtype=float)))
        by_algorithm.setdefault(tr.algorithm, []).append(tr.endpoint)
    clusters = {alg: len(cluster_endpoints(pts, cluster_threshold))
                for alg, pts in by_algorithm.items()}
    return {"per_trace": per_trace, "endpoint_clusters": clusters}
