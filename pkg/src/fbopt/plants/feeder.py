"""Single-phase radial distribution feeder with fixed-point AC power flow.

The feeder is a rooted tree of complex line impedances below a slack bus.
Controllable inputs u stack (p, q) injections of the PV sites, the
disturbance w stacks (p, q) injections of the load nodes, and the output y
is the vector of non-slack voltage magnitudes in per-unit.

Power flow solves the bus-injection fixed point

    v = v0 * 1 + Z conj(s / v)

on the tree impedance matrix Z (Z[i, j] sums the impedances shared by the
paths of buses i and j to the slack), which converges at the light loadings
this package operates in and yields a natural convergence certificate:
the returned operating point carries its own recomputed residual.

Sensitivities are central finite differences of |v| in u, which keeps the
interface plant-agnostic; a nominal linearization at zero injections and an
empirical Jacobian-error bound (max sampled deviation times a safety
factor) feed the certification workflow.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..numlin import spectral_norm
from ..problem import FeasibleSet, disk_box_block

__all__ = [
    "Line",
    "PvSite",
    "FeederModel",
    "OperatingPoint",
    "PowerFlowError",
    "GammaEstimate",
    "power_flow",
    "linearize_nominal",
    "jacobian_at",
    "sample_gamma",
    "operating_region_sampler",
    "default_feeder",
    "feeder_from_json_dict",
    "feeder_to_json_dict",
    "load_feeder",
    "overvoltage_series",
    "write_series_csv",
    "load_series_csv",
]


class PowerFlowError(RuntimeError):
    """Raised when the fixed-point iteration fails to converge."""


@dataclass(frozen=True)
class Line:
    parent: int
    child: int
    r: float
    x: float

    def __post_init__(self):
        if self.r <= 0:
            raise ValueError("line resistance must be positive")


@dataclass(frozen=True)
class PvSite:
    node: int
    p_max: float
    s_rated: float

    def __post_init__(self):
        if self.p_max < 0 or self.s_rated < 0:
            raise ValueError("PV ratings must be nonnegative")


@dataclass(frozen=True, eq=False)
class FeederModel:
    """Radial feeder: bus 0 is the slack, buses 1..n_bus carry sensors.

    ``load_nodes[k]`` receives the complex injection w[2k] + j w[2k+1];
    PV site k adds u[2k] + j u[2k+1] at its node. ``injection_cap`` bounds
    the admissible per-bus apparent power before power flow is attempted.
    """

    n_bus: int
    lines: tuple[Line, ...]
    pv: tuple[PvSite, ...]
    load_nodes: tuple[int, ...]
    slack_voltage: complex = 1.0 + 0.0j
    injection_cap: float = 5.0
    Z: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "lines", tuple(self.lines))
        object.__setattr__(self, "pv", tuple(self.pv))
        object.__setattr__(self, "load_nodes", tuple(self.load_nodes))
        if len(self.lines) != self.n_bus:
            raise ValueError("a radial feeder has exactly one line per non-slack bus")
        parent = {}
        for ln in self.lines:
            if ln.child in parent:
                raise ValueError(f"bus {ln.child} has two parents")
            parent[ln.child] = (ln.parent, complex(ln.r, ln.x))
        if set(parent) != set(range(1, self.n_bus + 1)):
            raise ValueError("lines must connect exactly buses 1..n_bus")
        paths = {}
        for i in range(1, self.n_bus + 1):
            node, edges, hops = i, {}, 0
            while node != 0:
                if node not in parent:
                    raise ValueError(f"bus {node} is not connected to the slack")
                p, zline = parent[node]
                edges[node] = zline
                node = p
                hops += 1
                if hops > self.n_bus:
                    raise ValueError("line list contains a cycle")
            paths[i] = edges
        Z = np.zeros((self.n_bus, self.n_bus), dtype=complex)
        for i in range(1, self.n_bus + 1):
            for j in range(1, self.n_bus + 1):
                Z[i - 1, j - 1] = sum(z for node, z in paths[j].items()
                                      if node in paths[i])
        object.__setattr__(self, "Z", Z)
        for site in self.pv:
            if not 1 <= site.node <= self.n_bus:
                raise ValueError(f"PV node {site.node} out of range")
        for node in self.load_nodes:
            if not 1 <= node <= self.n_bus:
                raise ValueError(f"load node {node} out of range")

    @property
    def n(self) -> int:
        return 2 * len(self.pv)

    @property
    def m(self) -> int:
        return self.n_bus

    @property
    def p(self) -> int:
        return 2 * len(self.load_nodes)

    def injections(self, u, w) -> np.ndarray:
        u = np.asarray(u, dtype=float).ravel()
        w = np.asarray(w, dtype=float).ravel()
        if u.size != self.n or w.size != self.p:
            raise ValueError(f"expected u of dim {self.n} and w of dim {self.p}")
        s = np.zeros(self.n_bus, dtype=complex)
        for k, site in enumerate(self.pv):
            s[site.node - 1] += u[2 * k] + 1j * u[2 * k + 1]
        for k, node in enumerate(self.load_nodes):
            s[node - 1] += w[2 * k] + 1j * w[2 * k + 1]
        return s

    def feasible_set(self) -> FeasibleSet:
        """Product of per-PV sets {0 <= p <= p_max, p^2 + q^2 <= s_rated^2}."""
        blocks = tuple(
            disk_box_block(lower=[0.0, -np.inf], upper=[site.p_max, np.inf],
                           radius=site.s_rated)
            for site in self.pv)
        return FeasibleSet(n_free=0, lower=(), upper=(), blocks=blocks)

    def u_reference(self) -> np.ndarray:
        """Full available active power, zero reactive."""
        u = np.zeros(self.n)
        for k, site in enumerate(self.pv):
            u[2 * k] = site.p_max
        return u

    # sim-facing plant protocol
    def evaluate(self, u, w) -> np.ndarray:
        return power_flow(self, u, w).y

    def jacobian(self, u, w) -> np.ndarray:
        return jacobian_at(self, u, w)


@dataclass
class OperatingPoint:
    """Converged power-flow state; residual is the recomputed fixed-point
    mismatch of the returned voltages."""

    u: np.ndarray
    w: np.ndarray
    v: np.ndarray
    y: np.ndarray
    residual: float
    iterations: int


def power_flow(model: FeederModel, u, w, tol: float = 1e-10,
               max_iter: int = 100) -> OperatingPoint:
    """Solve the bus-injection fixed point v = v0 + Z conj(s / v).

    Divergence (no residual improvement over 20 consecutive iterations, or
    the iteration budget) raises PowerFlowError: the loading is infeasible
    for this solution method.
    """
    s = model.injections(u, w)
    if np.max(np.abs(s)) > model.injection_cap:
        raise PowerFlowError(
            f"injection magnitude {np.max(np.abs(s)):.3f} exceeds cap "
            f"{model.injection_cap}")
    v0 = complex(model.slack_voltage)
    v = np.full(model.n_bus, v0, dtype=complex)
    best = np.inf
    stall = 0
    for it in range(1, max_iter + 1):
        if np.min(np.abs(v)) < 1e-6:
            raise PowerFlowError("voltage collapse: power flow infeasible at this loading")
        vn = v0 + model.Z @ np.conj(s / v)
        res = float(np.max(np.abs(vn - v)))
        v = vn
        if res <= tol:
            break
        if res < best - 1e-16:
            best = res
            stall = 0
        else:
            stall += 1
            if stall >= 20:
                raise PowerFlowError(
                    f"power flow infeasible at this loading (residual stalled at {res:.3e})")
    final = float(np.max(np.abs(v - (v0 + model.Z @ np.conj(s / v)))))
    if final > tol:
        raise PowerFlowError(
            f"power flow did not converge in {max_iter} iterations "
            f"(residual {final:.3e})")
    return OperatingPoint(u=np.asarray(u, dtype=float).copy(),
                          w=np.asarray(w, dtype=float).copy(),
                          v=v, y=np.abs(v), residual=final, iterations=it)


def jacobian_at(model: FeederModel, u, w, step: float = 1e-6) -> np.ndarray:
    """Central finite-difference sensitivity of |v| to u at (u, w)."""
    u = np.asarray(u, dtype=float).ravel()
    J = np.zeros((model.m, model.n))
    for k in range(model.n):
        e = np.zeros(model.n)
        e[k] = step
        J[:, k] = (power_flow(model, u + e, w).y
                   - power_flow(model, u - e, w).y) / (2.0 * step)
    return J


def linearize_nominal(model: FeederModel, step: float = 1e-6) -> np.ndarray:
    """Voltage sensitivity at zero injections and flat unit voltage."""
    return jacobian_at(model, np.zeros(model.n), np.zeros(model.p), step=step)


@dataclass
class GammaEstimate:
    """Empirical Jacobian-error bound and the per-sample errors behind it."""

    gamma: float
    errors: np.ndarray
    safety: float
    n_failed: int
    seed: int


def sample_gamma(model: FeederModel, sampler: Callable, count: int,
                 safety: float = 1.1, seed: int = 0,
                 nominal: np.ndarray | None = None) -> GammaEstimate:
    """gamma = safety * max_k ||J(u_k, w_k) - Pi_nom||_2 over sampled points.

    ``sampler(rng) -> (u, w)`` draws one operating point; each sample gets a
    child seed of ``seed`` so the estimate is reproducible. Samples where
    power flow fails are counted and skipped; all samples failing is an
    error. Errors are measured in spectral norm.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if safety < 1.0:
        raise ValueError("safety factor must be >= 1")
    Pi_nom = linearize_nominal(model) if nominal is None else np.asarray(nominal, dtype=float)
    errors = []
    failed = 0
    for sd in np.random.SeedSequence(seed).spawn(count):
        u, w = sampler(np.random.default_rng(sd))
        try:
            errors.append(spectral_norm(jacobian_at(model, u, w) - Pi_nom))
        except PowerFlowError:
            failed += 1
    if not errors:
        raise PowerFlowError("every sampled operating point was infeasible")
    errors = np.asarray(errors)
    return GammaEstimate(gamma=float(safety * errors.max()), errors=errors,
                         safety=safety, n_failed=failed, seed=seed)


def operating_region_sampler(model: FeederModel, w_lower, w_upper) -> Callable:
    """Uniform sampler: u over the PV feasible sets, w over a box."""
    w_lower = np.asarray(w_lower, dtype=float).ravel()
    w_upper = np.asarray(w_upper, dtype=float).ravel()
    if w_lower.size != model.p or w_upper.size != model.p:
        raise ValueError("w bounds must match the disturbance dimension")
    if np.any(w_lower > w_upper):
        raise ValueError("crossed w bounds")

    def sampler(rng: np.random.Generator):
        u = np.zeros(model.n)
        for k, site in enumerate(model.pv):
            p = rng.uniform(0.0, site.p_max)
            q_max = float(np.sqrt(max(site.s_rated**2 - p**2, 0.0)))
            u[2 * k] = p
            u[2 * k + 1] = rng.uniform(-q_max, q_max)
        w = rng.uniform(w_lower, w_upper)
        return u, w

    return sampler


def feeder_to_json_dict(model: FeederModel) -> dict:
    return {
        "n_bus": model.n_bus,
        "lines": [{"from": ln.parent, "to": ln.child, "r": ln.r, "x": ln.x}
                  for ln in model.lines],
        "pv": [{"node": s.node, "p_max": s.p_max, "s_rated": s.s_rated}
               for s in model.pv],
        "loads": [{"node": node, "w_index": 2 * k}
                  for k, node in enumerate(model.load_nodes)],
        "slack_voltage": [model.slack_voltage.real, model.slack_voltage.imag],
        "injection_cap": model.injection_cap,
    }


def feeder_from_json_dict(d: dict) -> FeederModel:
    loads = sorted(d["loads"], key=lambda entry: entry["w_index"])
    for k, entry in enumerate(loads):
        if entry["w_index"] != 2 * k:
            raise ValueError("load w_index values must be 0, 2, 4, ...")
    sv = d.get("slack_voltage", [1.0, 0.0])
    return FeederModel(
        n_bus=int(d["n_bus"]),
        lines=tuple(Line(int(ln["from"]), int(ln["to"]), float(ln["r"]), float(ln["x"]))
                    for ln in d["lines"]),
        pv=tuple(PvSite(int(s["node"]), float(s["p_max"]), float(s["s_rated"]))
                 for s in d["pv"]),
        load_nodes=tuple(int(entry["node"]) for entry in loads),
        slack_voltage=complex(sv[0], sv[1]),
        injection_cap=float(d.get("injection_cap", 5.0)))


def load_feeder(path) -> FeederModel:
    with open(path) as fh:
        return feeder_from_json_dict(json.load(fh))


def default_feeder() -> FeederModel:
    """Shipped 8-bus feeder: two laterals off a main run, PV at the leaves.

    Impedances and ratings are scaled so that full PV output under light
    load pushes leaf voltages past 1.05 p.u. while Jacobian variation over
    the operating region stays small enough to certify.
    """
    lines = (
        Line(0, 1, 0.013, 0.024), Line(1, 2, 0.017, 0.030),
        Line(2, 3, 0.021, 0.036), Line(3, 4, 0.028, 0.046),
        Line(2, 5, 0.021, 0.042), Line(5, 6, 0.028, 0.050),
        Line(3, 7, 0.024, 0.044), Line(7, 8, 0.028, 0.050),
    )
    pv = (PvSite(4, 0.42, 0.50), PvSite(6, 0.42, 0.50), PvSite(8, 0.36, 0.44))
    return FeederModel(n_bus=8, lines=lines, pv=pv, load_nodes=(1, 2, 3, 5, 7))


def overvoltage_series(model: FeederModel, steps: int = 900,
                       base_active=(-0.16, -0.14, -0.15, -0.13, -0.15),
                       dip: float = 0.97, width_fraction: float = 0.155,
                       power_factor_ratio: float = 0.35) -> np.ndarray:
    """Deterministic load replay producing a midday overvoltage event.

    Loads sit at their base values and dip toward zero on a bell curve
    centered mid-series; with PV held at full output the light-load valley
    lifts the leaf voltages above the upper limit.
    """
    n_loads = len(model.load_nodes)
    base = np.resize(np.asarray(base_active, dtype=float), n_loads)
    t = np.arange(steps)
    bell = np.exp(-0.5 * ((t - (steps - 1) / 2.0) / (width_fraction * steps)) ** 2)
    W = np.zeros((steps, model.p))
    for k in range(n_loads):
        W[:, 2 * k] = base[k] * (1.0 - dip * bell)
        W[:, 2 * k + 1] = power_factor_ratio * W[:, 2 * k]
    return W


def write_series_csv(path, W: np.ndarray) -> None:
    W = np.asarray(W, dtype=float)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + [f"w_{i}" for i in range(W.shape[1])])
        for k, row in enumerate(W):
            writer.writerow([k] + [repr(float(v)) for v in row])


def load_series_csv(path) -> np.ndarray:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[0] != "t":
            raise ValueError("series CSV must start with a 't' column")
        for row in reader:
            rows.append([float(v) for v in row[1:]])
    return np.asarray(rows)
