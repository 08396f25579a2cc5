"""Optimization problem data for measurement-driven projected gradient runs.

A problem consists of

* a quadratic input cost ``f(u) = 0.5 u^T H u + h^T u`` (gradient ``H u + h``),
* an output penalty ``g(y)`` combining soft limit violations
  ``(eta/2) * sum_i s_i(y)^2`` (gradient ``eta * s(y)`` with ``s`` the
  unit-slope soft-threshold) and an optional smooth quadratic output term
  with gradient ``Q2 y + c2``,
* a fixed input-output sensitivity matrix ``Pi`` standing in for the true
  plant Jacobian, and
* a feasible input set partitioned as free coordinates x box coordinates x
  general convex blocks, each general block carrying its own exact Euclidean
  projection.

The matrices H and Q2 are Hessians of the respective terms, i.e. the
quadratic costs carry an implicit 1/2. With this convention the generalized
Jacobian of the combined map ``u -> grad_f(u) + Pi^T grad_g(y(u))`` is
``H + Pi^T (Q2 + eta * diag(d)) dy/du`` with the soft-threshold slopes
``d_i in [0, 1]``, which is the object the certification modules bound.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .numlin import as_matrix, psd_margin, symmetrize

__all__ = [
    "ConvexBlock",
    "disk_box_block",
    "FeasibleSet",
    "ObjectiveSpec",
    "ApproxModel",
    "ProblemSpec",
    "grad_f",
    "soft_threshold",
    "grad_g",
    "approx_gradient",
    "objective_value",
]


@dataclass(frozen=True)
class ConvexBlock:
    """A general convex factor of the feasible set with an exact projector.

    ``project`` must be the exact Euclidean projection onto the block;
    in particular it must be idempotent to 1e-12.
    """

    dim: int
    project: Callable[[np.ndarray], np.ndarray]
    kind: str = "custom"
    params: dict = field(default_factory=dict)


def _project_clip_ball(x: np.ndarray, lower: np.ndarray, upper: np.ndarray,
                       radius: float, tol: float) -> np.ndarray:
    """Euclidean projection onto {z : lower <= z <= upper, ||z|| <= radius}.

    Dualizing the ball constraint gives z(lam) = clip(x / (1 + lam)); the
    multiplier lam >= 0 is found by bisection on ||z(lam)|| = radius.
    """
    z0 = np.clip(x, lower, upper)
    if np.linalg.norm(z0) <= radius:
        return z0
    lo, hi = 0.0, 1.0
    for _ in range(200):
        if np.linalg.norm(np.clip(x / (1.0 + hi), lower, upper)) <= radius:
            break
        hi *= 2.0
    else:
        raise RuntimeError("ball-box projection failed to bracket the multiplier")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        zm = np.clip(x / (1.0 + mid), lower, upper)
        nm = np.linalg.norm(zm)
        if nm > radius:
            lo = mid
        else:
            # accept only from the feasible side so reprojection is a no-op
            if radius - nm <= tol:
                return zm
            hi = mid
        if hi - lo <= 1e-17 * (1.0 + hi):
            break
    return np.clip(x / (1.0 + hi), lower, upper)


def disk_box_block(lower, upper, radius: float, tol: float = 1e-12) -> ConvexBlock:
    """Block for {z : lower <= z <= upper, ||z||_2 <= radius}.

    This is the feasible set of a converter injection: active power boxed,
    total apparent power limited by the equipment rating.
    """
    lo = np.atleast_1d(np.asarray(lower, dtype=float))
    up = np.atleast_1d(np.asarray(upper, dtype=float))
    if lo.shape != up.shape or lo.ndim != 1:
        raise ValueError("lower/upper must be 1-d arrays of equal length")
    if np.any(lo > up):
        raise ValueError("crossed box bounds in disk_box_block")
    if radius <= 0:
        raise ValueError("radius must be positive")
    if np.linalg.norm(np.clip(np.zeros_like(lo), lo, up)) > radius:
        raise ValueError("box and ball do not intersect")
    d = lo.size

    def project(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (d,):
            raise ValueError(f"expected block of dim {d}, got shape {x.shape}")
        return _project_clip_ball(x, lo, up, radius, tol)

    return ConvexBlock(dim=d, project=project, kind="disk_box",
                       params={"lower": lo.tolist(), "upper": up.tolist(),
                               "radius": float(radius)})


@dataclass(frozen=True, eq=False)
class FeasibleSet:
    """Product set: free coordinates, a box, then general convex blocks.

    Box bounds may be +-inf. The coordinate layout is [free | box | blocks]
    and is relied on by the structured-weight machinery: admissible weights
    are full on the free part, diagonal on the box part and identity on the
    general part, which is exactly the class for which weighted and
    Euclidean projections onto the set coincide.
    """

    n_free: int = 0
    lower: np.ndarray = ()
    upper: np.ndarray = ()
    blocks: tuple[ConvexBlock, ...] = ()

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        up = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.size == 0:
            lo = np.zeros(0)
            up = np.zeros(0)
        if lo.shape != up.shape:
            raise ValueError("box lower/upper shapes differ")
        if np.any(lo > up):
            raise ValueError("box lower bound exceeds upper bound")
        if self.n_free < 0:
            raise ValueError("n_free must be nonnegative")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", up)
        object.__setattr__(self, "blocks", tuple(self.blocks))

    @property
    def n_box(self) -> int:
        return self.lower.size

    @property
    def n_general(self) -> int:
        return sum(b.dim for b in self.blocks)

    @property
    def dim(self) -> int:
        return self.n_free + self.n_box + self.n_general

    def slices(self) -> tuple[slice, slice, slice]:
        """(free, box, general) coordinate slices."""
        a = self.n_free
        b = a + self.n_box
        return slice(0, a), slice(a, b), slice(b, self.dim)

    def project(self, x) -> np.ndarray:
        """Exact Euclidean projection, computed block-wise."""
        v = np.asarray(x, dtype=float).ravel()
        if v.size != self.dim:
            raise ValueError(f"expected vector of dim {self.dim}, got {v.size}")
        out = v.copy()
        _, box, _ = self.slices()
        out[box] = np.clip(v[box], self.lower, self.upper)
        off = self.n_free + self.n_box
        for blk in self.blocks:
            out[off:off + blk.dim] = blk.project(v[off:off + blk.dim])
            off += blk.dim
        return out

    def contains(self, x, tol: float = 1e-9) -> bool:
        v = np.asarray(x, dtype=float).ravel()
        return np.linalg.norm(v - self.project(v)) <= tol

    def to_json_dict(self) -> dict:
        blocks = []
        for b in self.blocks:
            if b.kind != "disk_box":
                raise ValueError("only disk_box blocks are JSON-serializable")
            blocks.append({"kind": b.kind, **b.params})
        return {"n_free": self.n_free, "lower": self.lower.tolist(),
                "upper": self.upper.tolist(), "blocks": blocks}

    @staticmethod
    def from_json_dict(d: dict) -> "FeasibleSet":
        blocks = []
        for b in d.get("blocks", []):
            if b.get("kind") != "disk_box":
                raise ValueError(f"unknown block kind {b.get('kind')!r}")
            blocks.append(disk_box_block(b["lower"], b["upper"], b["radius"]))
        return FeasibleSet(n_free=int(d.get("n_free", 0)),
                           lower=np.asarray(d.get("lower", []), dtype=float),
                           upper=np.asarray(d.get("upper", []), dtype=float),
                           blocks=tuple(blocks))


def _as_vector(v, name: str) -> np.ndarray:
    a = np.asarray(v, dtype=float).ravel()
    if a.size and not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


@dataclass(frozen=True, eq=False)
class ObjectiveSpec:
    """Cost data: input quadratic, soft output limits, optional smooth term.

    ``H`` is the Hessian of the input cost and must be symmetric PSD.
    ``y_lower``/``y_upper`` entries may be +-inf; None disables the limit.
    ``Q2``/``c2`` add a smooth output gradient ``Q2 y + c2`` when present.
    """

    H: np.ndarray
    h: np.ndarray
    eta: float = 1.0
    y_lower: np.ndarray | None = None
    y_upper: np.ndarray | None = None
    Q2: np.ndarray | None = None
    c2: np.ndarray | None = None

    def __post_init__(self):
        H = as_matrix(self.H, "H")
        if H.shape[0] != H.shape[1]:
            raise ValueError("H must be square")
        if np.max(np.abs(H - H.T)) > 1e-9 * max(1.0, np.max(np.abs(H))):
            raise ValueError("H must be symmetric")
        H = symmetrize(H, "H")
        if psd_margin(H) < -1e-9 * max(1.0, float(np.max(np.abs(H)))):
            raise ValueError("H must be positive semidefinite")
        h = _as_vector(self.h, "h")
        if h.size != H.shape[0]:
            raise ValueError("h has wrong dimension")
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        yl = None if self.y_lower is None else np.asarray(self.y_lower, dtype=float).ravel()
        yu = None if self.y_upper is None else np.asarray(self.y_upper, dtype=float).ravel()
        if (yl is None) != (yu is None):
            raise ValueError("y_lower and y_upper must be given together")
        if yl is not None and (yl.shape != yu.shape or np.any(yl > yu)):
            raise ValueError("output limits crossed or mismatched")
        Q2 = None if self.Q2 is None else symmetrize(self.Q2, "Q2")
        c2 = None if self.c2 is None else _as_vector(self.c2, "c2")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "y_lower", yl)
        object.__setattr__(self, "y_upper", yu)
        object.__setattr__(self, "Q2", Q2)
        object.__setattr__(self, "c2", c2)

    @property
    def n(self) -> int:
        return self.H.shape[0]


@dataclass(frozen=True, eq=False)
class ApproxModel:
    """Fixed sensitivity model: y-response Pi (m x n), optional
    disturbance sensitivity Pi_w (m x p) for feedforward baselines."""

    Pi: np.ndarray
    Pi_w: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "Pi", as_matrix(self.Pi, "Pi"))
        if self.Pi_w is not None:
            Pw = as_matrix(self.Pi_w, "Pi_w")
            if Pw.shape[0] != self.Pi.shape[0]:
                raise ValueError("Pi_w row count must match Pi")
            object.__setattr__(self, "Pi_w", Pw)

    @property
    def m(self) -> int:
        return self.Pi.shape[0]

    @property
    def n(self) -> int:
        return self.Pi.shape[1]


def grad_f(spec: ObjectiveSpec, u) -> np.ndarray:
    """Gradient of the input cost: H u + h."""
    v = _as_vector(u, "u")
    if v.size != spec.n:
        raise ValueError(f"u has dim {v.size}, expected {spec.n}")
    return spec.H @ v + spec.h


def soft_threshold(y, y_lower, y_upper) -> np.ndarray:
    """Signed distance outside the band [y_lower, y_upper], zero inside.

    Unit slope outside the band; bounds may be +-inf.
    """
    yv = np.asarray(y, dtype=float).ravel()
    lo = np.asarray(y_lower, dtype=float).ravel()
    up = np.asarray(y_upper, dtype=float).ravel()
    if lo.shape != yv.shape or up.shape != yv.shape:
        raise ValueError("bound dimensions do not match y")
    if np.any(lo > up):
        raise ValueError("crossed bounds: y_lower > y_upper")
    return np.where(yv > up, yv - up, np.where(yv < lo, yv - lo, 0.0))


def grad_g(spec: ObjectiveSpec, y) -> np.ndarray:
    """Gradient of the output penalty: eta * s(y) plus Q2 y + c2 if present."""
    yv = _as_vector(y, "y")
    out = np.zeros_like(yv)
    if spec.y_lower is not None:
        out = out + spec.eta * soft_threshold(yv, spec.y_lower, spec.y_upper)
    if spec.Q2 is not None:
        if spec.Q2.shape[0] != yv.size:
            raise ValueError("Q2 dimension does not match y")
        out = out + spec.Q2 @ yv
    if spec.c2 is not None:
        if spec.c2.size != yv.size:
            raise ValueError("c2 dimension does not match y")
        out = out + spec.c2
    return out


def approx_gradient(spec: ObjectiveSpec, model: ApproxModel, u, y_measured) -> np.ndarray:
    """Measurement-based search direction: grad_f(u) + Pi^T grad_g(y).

    Uses only the fixed model Pi and the measured output, never a plant
    Jacobian.
    """
    gy = grad_g(spec, y_measured)
    if gy.size != model.m:
        raise ValueError("measured output dimension does not match Pi")
    return grad_f(spec, u) + model.Pi.T @ gy


def objective_value(spec: ObjectiveSpec, u, y) -> float:
    """f(u) + g(y) under the package conventions."""
    uv = _as_vector(u, "u")
    yv = _as_vector(y, "y")
    val = 0.5 * uv @ spec.H @ uv + spec.h @ uv
    if spec.y_lower is not None:
        s = soft_threshold(yv, spec.y_lower, spec.y_upper)
        val += 0.5 * spec.eta * float(s @ s)
    if spec.Q2 is not None:
        val += 0.5 * yv @ spec.Q2 @ yv
    if spec.c2 is not None:
        val += float(spec.c2 @ yv)
    return float(val)


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """Bundle of objective, sensitivity model and feasible set."""

    objective: ObjectiveSpec
    model: ApproxModel
    feasible_set: FeasibleSet

    def __post_init__(self):
        if self.objective.n != self.model.n or self.model.n != self.feasible_set.dim:
            raise ValueError("objective, model and feasible set dimensions disagree")

    def to_json_dict(self) -> dict:
        def arr(a):
            return None if a is None else np.asarray(a).tolist()

        o = self.objective
        return {
            "objective": {"H": arr(o.H), "h": arr(o.h), "eta": o.eta,
                          "y_lower": arr(o.y_lower), "y_upper": arr(o.y_upper),
                          "Q2": arr(o.Q2), "c2": arr(o.c2)},
            "model": {"Pi": arr(self.model.Pi), "Pi_w": arr(self.model.Pi_w)},
            "feasible_set": self.feasible_set.to_json_dict(),
        }

    @staticmethod
    def from_json_dict(d: dict) -> "ProblemSpec":
        o = d["objective"]
        obj = ObjectiveSpec(
            H=np.asarray(o["H"], dtype=float), h=np.asarray(o["h"], dtype=float),
            eta=float(o.get("eta", 1.0)),
            y_lower=None if o.get("y_lower") is None else np.asarray(o["y_lower"], dtype=float),
            y_upper=None if o.get("y_upper") is None else np.asarray(o["y_upper"], dtype=float),
            Q2=None if o.get("Q2") is None else np.asarray(o["Q2"], dtype=float),
            c2=None if o.get("c2") is None else np.asarray(o["c2"], dtype=float))
        mdl = d["model"]
        model = ApproxModel(Pi=np.asarray(mdl["Pi"], dtype=float),
                            Pi_w=None if mdl.get("Pi_w") is None
                            else np.asarray(mdl["Pi_w"], dtype=float))
        fset = FeasibleSet.from_json_dict(d["feasible_set"])
        return ProblemSpec(objective=obj, model=model, feasible_set=fset)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @staticmethod
    def load(path) -> "ProblemSpec":
        with open(path) as fh:
            return ProblemSpec.from_json_dict(json.load(fh))
