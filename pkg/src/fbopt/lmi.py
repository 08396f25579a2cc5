"""Small-scale semidefinite feasibility with an independently verified margin.

A program consists of scalar and symmetric-block decision variables and a
list of affine symmetric-matrix constraints required PSD. Solving maximizes
a common margin t with every listed constraint shifted to >= t*I (variable
domain constraints such as scalar signs and PSD blocks are enforced as-is,
not shifted). The optimizer is an off-the-shelf conic interior-point method
reached through cvxpy, but its output is never trusted directly: the margin
and all per-constraint eigenvalues reported in a solution are recomputed
from the returned values with plain dense eigensolves, and certification
workflows call verify_solution again before using a certificate.

Strict inequalities are meaningless in floating point; feasibility means a
verified margin of at least eps relative to the program scale. Homogeneous
programs (all constant terms zero) have unbounded margins and require a
trace normalization; one is auto-added on the single block variable when
that is unambiguous.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .numlin import psd_margin, spectral_norm, symmetrize

__all__ = [
    "VarSpec",
    "BlockTerm",
    "Constraint",
    "TraceEquality",
    "LmiProgram",
    "LmiSolution",
    "VerificationReport",
    "solve_feasibility",
    "verify_solution",
]

_VAR_KINDS = ("scalar_nonneg", "scalar_free", "psd", "sym")
DEFAULT_EPS = 1e-6
DEFAULT_SOLVER = "CLARABEL"
MARGIN_CAP = 1e4


@dataclass(frozen=True)
class VarSpec:
    name: str
    kind: str
    dim: int = 1

    def __post_init__(self):
        if self.kind not in _VAR_KINDS:
            raise ValueError(f"unknown variable kind {self.kind!r}")
        if self.kind.startswith("scalar") and self.dim != 1:
            raise ValueError("scalar variables have dim 1")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")


@dataclass(frozen=True, eq=False)
class BlockTerm:
    """Affine contribution alpha * (L X R^T + (L X R^T)^T) of block var X."""

    alpha: float
    left: np.ndarray
    right: np.ndarray


@dataclass(frozen=True, eq=False)
class Constraint:
    """Affine symmetric-matrix expression required >= t*I."""

    name: str
    constant: np.ndarray
    scalar_terms: Mapping[str, np.ndarray] = field(default_factory=dict)
    block_terms: Mapping[str, tuple[BlockTerm, ...]] = field(default_factory=dict)

    def __post_init__(self):
        C0 = symmetrize(self.constant, f"constraint {self.name} constant")
        object.__setattr__(self, "constant", C0)
        for vname, G in self.scalar_terms.items():
            if G.shape != C0.shape:
                raise ValueError(f"generator for {vname} has wrong shape")

    @property
    def dim(self) -> int:
        return self.constant.shape[0]

    def evaluate(self, values: Mapping[str, float | np.ndarray]) -> np.ndarray:
        """Numeric value of the expression at the given variable values."""
        M = self.constant.copy()
        for vname, G in self.scalar_terms.items():
            M = M + float(values[vname]) * G
        for vname, terms in self.block_terms.items():
            X = np.asarray(values[vname], dtype=float)
            for t in terms:
                P = t.alpha * (t.left @ X @ t.right.T)
                M = M + P + P.T
        return M

    def scale(self) -> float:
        """Spectral-norm scale of the expression's data."""
        s = spectral_norm(self.constant)
        for G in self.scalar_terms.values():
            s = max(s, spectral_norm(G))
        for terms in self.block_terms.values():
            for t in terms:
                s = max(s, 2.0 * abs(t.alpha)
                        * spectral_norm(t.left) * spectral_norm(t.right))
        return max(s, 1e-300)


@dataclass(frozen=True)
class TraceEquality:
    """sum_v coeff_v * trace(X_v) == target (scalars count as 1x1 traces)."""

    coefficients: Mapping[str, float]
    target: float


@dataclass(frozen=True, eq=False)
class LmiProgram:
    variables: tuple[VarSpec, ...]
    constraints: tuple[Constraint, ...]
    normalizations: tuple[TraceEquality, ...] = ()

    def __post_init__(self):
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            raise ValueError("duplicate variable names")
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "constraints", tuple(self.constraints))
        object.__setattr__(self, "normalizations", tuple(self.normalizations))

    def var(self, name: str) -> VarSpec:
        for v in self.variables:
            if v.name == name:
                return v
        raise KeyError(name)

    def is_homogeneous(self) -> bool:
        return all(spectral_norm(c.constant) <= 1e-14 * c.scale()
                   for c in self.constraints)

    def scale(self) -> float:
        return max(c.scale() for c in self.constraints)

    def to_json_dict(self) -> dict:
        return {
            "variables": [{"name": v.name, "kind": v.kind, "dim": v.dim}
                          for v in self.variables],
            "constraints": [{
                "name": c.name,
                "constant": c.constant.tolist(),
                "scalar_terms": {k: G.tolist() for k, G in c.scalar_terms.items()},
                "block_terms": {k: [{"alpha": t.alpha, "left": t.left.tolist(),
                                     "right": t.right.tolist()} for t in terms]
                                for k, terms in c.block_terms.items()},
            } for c in self.constraints],
            "normalizations": [{"coefficients": dict(nz.coefficients),
                                "target": nz.target}
                               for nz in self.normalizations],
        }

    def sha256(self) -> str:
        blob = json.dumps(self.to_json_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


@dataclass
class LmiSolution:
    """Returned values plus independently recomputed margins.

    ``margin`` and ``per_constraint`` come from dense eigensolves on the
    returned values, not from the solver's own report.
    """

    values: dict
    margin: float
    per_constraint: dict
    status: str
    solver_status: str
    eps_effective: float

    def to_json_dict(self) -> dict:
        vals = {k: (v.tolist() if isinstance(v, np.ndarray) else float(v))
                for k, v in self.values.items()}
        return {"values": vals, "margin": self.margin,
                "per_constraint": dict(self.per_constraint),
                "status": self.status, "solver_status": self.solver_status,
                "eps_effective": self.eps_effective}


def _normalizations_for(prog: LmiProgram) -> tuple[TraceEquality, ...]:
    if prog.normalizations or not prog.is_homogeneous():
        return prog.normalizations
    blocks = [v for v in prog.variables if v.kind in ("psd", "sym")]
    if len(blocks) == 1:
        return (TraceEquality({blocks[0].name: 1.0}, float(blocks[0].dim)),)
    raise ValueError(
        "homogeneous program has an unbounded margin; add a trace normalization")


def solve_feasibility(prog: LmiProgram, eps: float = DEFAULT_EPS,
                      solver: str = DEFAULT_SOLVER,
                      margin_cap: float = MARGIN_CAP) -> LmiSolution:
    """Maximize the common constraint margin and classify feasibility.

    status is "feasible" when the recomputed margin is at least
    eps * program_scale, "marginal" within +-eps of zero, else "infeasible".
    Solver failures degrade to an infeasible report rather than raising.
    """
    import cvxpy as cp

    scale = prog.scale()
    eps_eff = eps * scale
    normalizations = _normalizations_for(prog)

    cvars: dict[str, object] = {}
    domain = []
    for v in prog.variables:
        if v.kind == "scalar_nonneg":
            cvars[v.name] = cp.Variable(name=v.name, nonneg=True)
        elif v.kind == "scalar_free":
            cvars[v.name] = cp.Variable(name=v.name)
        else:
            X = cp.Variable((v.dim, v.dim), name=v.name, symmetric=True)
            cvars[v.name] = X
            if v.kind == "psd":
                domain.append(X >> 0)
    t = cp.Variable(name="margin")
    cons = list(domain) + [t <= margin_cap]
    for c in prog.constraints:
        expr = cp.Constant(c.constant)
        for vname, G in c.scalar_terms.items():
            expr = expr + cvars[vname] * cp.Constant(G)
        for vname, terms in c.block_terms.items():
            X = cvars[vname]
            for bt in terms:
                P = bt.alpha * (cp.Constant(bt.left) @ X @ cp.Constant(bt.right.T))
                expr = expr + P + P.T
        if c.dim == 1:
            cons.append(expr[0, 0] >= t)
        else:
            cons.append(expr >> t * np.eye(c.dim))
    for nz in normalizations:
        e = 0
        for vname, coeff in nz.coefficients.items():
            x = cvars[vname]
            e = e + coeff * (cp.trace(x) if x.ndim == 2 else x)
        cons.append(e == nz.target)

    problem = cp.Problem(cp.Maximize(t), cons)
    try:
        # accuracy warnings are moot: margins are recomputed independently below
        import warnings

        with warnings.catch_warnings():
            warnings.filterwarnings("ignore", message="Solution may be inaccurate")
            problem.solve(solver=solver)
        solver_status = str(problem.status)
    except Exception as exc:  # degrade to an infeasible report, never crash
        return LmiSolution(values={}, margin=-np.inf, per_constraint={},
                           status="infeasible", solver_status=f"error: {exc}",
                           eps_effective=eps_eff)

    values: dict = {}
    for v in prog.variables:
        raw = cvars[v.name].value
        if raw is None:
            return LmiSolution(values={}, margin=-np.inf, per_constraint={},
                               status="infeasible", solver_status=solver_status,
                               eps_effective=eps_eff)
        values[v.name] = (float(raw) if v.kind.startswith("scalar")
                          else symmetrize(np.asarray(raw, dtype=float)))

    per = {c.name: psd_margin(c.evaluate(values)) for c in prog.constraints}
    margin = min(per.values())
    if margin >= eps_eff:
        status = "feasible"
    elif margin >= -eps_eff:
        status = "marginal"
    else:
        status = "infeasible"
    return LmiSolution(values=values, margin=float(margin), per_constraint=per,
                       status=status, solver_status=solver_status,
                       eps_effective=eps_eff)


@dataclass
class VerificationReport:
    ok: bool
    per_constraint: dict
    domain_ok: bool
    normalization_ok: bool
    detail: str = ""


def verify_solution(prog: LmiProgram, sol: LmiSolution,
                    tol: float = 1e-8) -> VerificationReport:
    """Recompute every constraint margin from the returned values.

    A certificate is trusted only if this passes; the solver itself never is.
    Checks: per-constraint lambda_min >= sol.margin - tol*scale, variable
    domains, and trace normalizations.
    """
    scale = prog.scale()
    slack = tol * max(1.0, scale)
    per = {}
    ok = True
    for c in prog.constraints:
        lam = psd_margin(c.evaluate(sol.values))
        per[c.name] = lam
        if lam < sol.margin - slack:
            ok = False
    domain_ok = True
    for v in prog.variables:
        val = sol.values.get(v.name)
        if val is None:
            domain_ok = False
            continue
        if v.kind == "scalar_nonneg" and val < -slack:
            domain_ok = False
        if v.kind == "psd" and psd_margin(np.asarray(val)) < -slack:
            domain_ok = False
    normalization_ok = True
    for nz in _normalizations_for(prog):
        total = 0.0
        for vname, coeff in nz.coefficients.items():
            val = sol.values[vname]
            total += coeff * (float(np.trace(val)) if isinstance(val, np.ndarray)
                              else float(val))
        if abs(total - nz.target) > 1e-6 * max(1.0, abs(nz.target)):
            normalization_ok = False
    ok = ok and domain_ok and normalization_ok
    detail = "" if ok else "recomputed margins or domains violated"
    return VerificationReport(ok=ok, per_constraint=per, domain_ok=domain_ok,
                              normalization_ok=normalization_ok, detail=detail)
