"""Jacobian uncertainty sets and multiplier cones for robustness tests.

Two parameterizations of a Jacobian uncertainty set are supported:

* a polytope, the convex hull of explicit vertex matrices, and
* a linear-fractional family {A + B Delta (I - D Delta)^{-1} C} over a
  block-structured set of Delta matrices.

For the LFT case, a multiplier cone is a parameterized family of symmetric
matrices Theta certifying the quadratic constraint

    p = Delta q  =>  [q; p]^T Theta [q; p] >= 0

for every admissible Delta. Conventions used everywhere: Delta has shape
(s, z), q lives in R^z, p = Delta q lives in R^s, and Theta acts on the
stacked vector [q; p] (q block first). Cones are immutable after
construction; Monte-Carlo validation derives one child seed per trial from
the master seed so results do not depend on evaluation order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Mapping, Sequence

import numpy as np

from .numlin import as_matrix

__all__ = [
    "PolytopeSet",
    "DeltaBlock",
    "LftSet",
    "ConeParam",
    "BlockPlacement",
    "MultiplierCone",
    "cone_unstructured_norm_bounded",
    "cone_repeated_scalar_norm_bounded",
    "cone_sector_unstructured",
    "cone_sector_repeated",
    "cone_block",
    "cone_for_blocks",
    "build_oag_lft",
    "build_smooth_output_lft",
    "build_oag_polytope",
    "lft_jacobian",
    "sample_delta",
    "iqc_validate",
    "IqcReport",
]

VERTEX_CAP_DEFAULT = 4096


@dataclass(frozen=True, eq=False)
class PolytopeSet:
    """Convex hull of explicit square vertex matrices."""

    vertices: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.vertices) == 0:
            raise ValueError("polytope needs at least one vertex")
        mats = tuple(as_matrix(V, f"vertex {i}") for i, V in enumerate(self.vertices))
        n = mats[0].shape[0]
        for V in mats:
            if V.shape != (n, n):
                raise ValueError("all vertices must be square with equal dimension")
        object.__setattr__(self, "vertices", mats)

    @property
    def dim(self) -> int:
        return self.vertices[0].shape[0]

    def to_json_dict(self) -> dict:
        return {"vertices": [V.tolist() for V in self.vertices]}

    @staticmethod
    def from_json_dict(d: dict) -> "PolytopeSet":
        return PolytopeSet(tuple(np.asarray(V, dtype=float) for V in d["vertices"]))


_BLOCK_KINDS = ("norm_bounded", "repeated_norm_bounded", "sector", "repeated_sector")


@dataclass(frozen=True)
class DeltaBlock:
    """One diagonal block of the structured uncertainty.

    kinds:
      norm_bounded            full (rows x cols) block, spectral norm <= gamma
      repeated_norm_bounded   delta * I, |delta| <= gamma (rows == cols)
      sector                  symmetric block, lo*I <= Delta <= hi*I
      repeated_sector         delta * I, lo <= delta <= hi
    """

    kind: str
    rows: int
    cols: int
    gamma: float | None = None
    sector: tuple[float, float] | None = None

    def __post_init__(self):
        if self.kind not in _BLOCK_KINDS:
            raise ValueError(f"unknown block kind {self.kind!r}")
        if self.rows <= 0 or self.cols <= 0:
            raise ValueError("block dimensions must be positive")
        if self.kind in ("norm_bounded", "repeated_norm_bounded"):
            if self.gamma is None or not self.gamma > 0:
                raise ValueError("norm-bounded block needs gamma > 0")
        else:
            if self.sector is None:
                raise ValueError("sector block needs (lo, hi) bounds")
            lo, hi = self.sector
            if not (0 <= lo <= hi):
                raise ValueError("sector bounds must satisfy 0 <= lo <= hi")
        if self.kind != "norm_bounded" and self.rows != self.cols:
            raise ValueError(f"{self.kind} block must be square")


@dataclass(frozen=True, eq=False)
class LftSet:
    """Family {A + B Delta (I - D Delta)^{-1} C, Delta block-structured}."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    blocks: tuple[DeltaBlock, ...]

    def __post_init__(self):
        A = as_matrix(self.A, "A")
        B = as_matrix(self.B, "B")
        C = as_matrix(self.C, "C")
        D = as_matrix(self.D, "D")
        n = A.shape[0]
        if A.shape != (n, n):
            raise ValueError("A must be square")
        s = sum(b.rows for b in self.blocks)
        z = sum(b.cols for b in self.blocks)
        if B.shape != (n, s):
            raise ValueError(f"B must be {n}x{s}, got {B.shape}")
        if C.shape != (z, n):
            raise ValueError(f"C must be {z}x{n}, got {C.shape}")
        if D.shape != (z, s):
            raise ValueError(f"D must be {z}x{s}, got {D.shape}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "blocks", tuple(self.blocks))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def s(self) -> int:
        return self.B.shape[1]

    @property
    def z(self) -> int:
        return self.C.shape[0]

    def to_json_dict(self) -> dict:
        return {
            "A": self.A.tolist(), "B": self.B.tolist(),
            "C": self.C.tolist(), "D": self.D.tolist(),
            "blocks": [{"kind": b.kind, "rows": b.rows, "cols": b.cols,
                        "gamma": b.gamma,
                        "sector": None if b.sector is None else list(b.sector)}
                       for b in self.blocks],
        }

    @staticmethod
    def from_json_dict(d: dict) -> "LftSet":
        blocks = tuple(
            DeltaBlock(kind=b["kind"], rows=int(b["rows"]), cols=int(b["cols"]),
                       gamma=b.get("gamma"),
                       sector=None if b.get("sector") is None else tuple(b["sector"]))
            for b in d["blocks"])
        return LftSet(np.asarray(d["A"], dtype=float), np.asarray(d["B"], dtype=float),
                      np.asarray(d["C"], dtype=float), np.asarray(d["D"], dtype=float),
                      blocks)


@dataclass(frozen=True)
class ConeParam:
    """Decision parameter of a multiplier cone.

    kind "scalar" is a nonnegative scalar, "psd" a symmetric PSD matrix,
    "skew" a skew-symmetric matrix (free).
    """

    name: str
    kind: str
    dim: int = 1


@dataclass(frozen=True, eq=False)
class BlockPlacement:
    """Contribution alpha * (L X R^T + (L X R^T)^T) of a matrix parameter X."""

    alpha: float
    left: np.ndarray
    right: np.ndarray


@dataclass(frozen=True, eq=False)
class MultiplierCone:
    """Affine parameterization of multiplier matrices on [q; p] coordinates.

    assemble(values) produces Theta = sum_k v_k G_k over scalar parameters
    plus sum of block placements over matrix parameters. Every Theta in the
    cone satisfies the positivity contract for the uncertainty structure the
    cone was built for; iqc_validate samples that contract.
    """

    z: int
    s: int
    params: tuple[ConeParam, ...]
    scalar_generators: Mapping[str, np.ndarray] = field(default_factory=dict)
    block_placements: Mapping[str, tuple[BlockPlacement, ...]] = field(default_factory=dict)

    def __post_init__(self):
        d = self.dim
        for name, G in self.scalar_generators.items():
            if G.shape != (d, d) or np.max(np.abs(G - G.T)) > 1e-12:
                raise ValueError(f"generator {name} must be symmetric {d}x{d}")

    @property
    def dim(self) -> int:
        return self.z + self.s

    def param(self, name: str) -> ConeParam:
        for p in self.params:
            if p.name == name:
                return p
        raise KeyError(name)

    def assemble(self, values: Mapping[str, float | np.ndarray]) -> np.ndarray:
        T = np.zeros((self.dim, self.dim))
        for p in self.params:
            v = values[p.name]
            if p.kind == "scalar":
                T += float(v) * self.scalar_generators[p.name]
            else:
                X = np.asarray(v, dtype=float)
                for pl in self.block_placements[p.name]:
                    M = pl.alpha * (pl.left @ X @ pl.right.T)
                    T += M + M.T
        return T

    def sample_params(self, rng: np.random.Generator) -> dict:
        """Random admissible parameter values, O(1) scale."""
        out = {}
        for p in self.params:
            if p.kind == "scalar":
                out[p.name] = float(rng.uniform(0.0, 2.0))
            elif p.kind == "psd":
                G = rng.standard_normal((p.dim, p.dim))
                out[p.name] = (G @ G.T) / p.dim
            elif p.kind == "skew":
                A = rng.standard_normal((p.dim, p.dim))
                out[p.name] = 0.5 * (A - A.T)
            else:
                raise ValueError(f"unknown parameter kind {p.kind!r}")
        return out


def _selector(dim: int, rows: Sequence[int]) -> np.ndarray:
    E = np.zeros((dim, len(rows)))
    for j, r in enumerate(rows):
        E[r, j] = 1.0
    return E


def cone_unstructured_norm_bounded(gamma: float, s: int, z: int) -> MultiplierCone:
    """{theta * blkdiag(I_z, -I_s / gamma^2) : theta >= 0}.

    Valid for any Delta in R^{s x z} with spectral norm <= gamma, since then
    ||p||^2 <= gamma^2 ||q||^2.
    """
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    d = z + s
    G = np.zeros((d, d))
    G[:z, :z] = np.eye(z)
    G[z:, z:] = -np.eye(s) / gamma**2
    return MultiplierCone(z=z, s=s, params=(ConeParam("theta", "scalar"),),
                          scalar_generators={"theta": G})


def cone_repeated_scalar_norm_bounded(gamma: float, dim: int) -> MultiplierCone:
    """{[Phi, Psi; Psi^T, -Phi/gamma^2] : Phi PSD, Psi skew} for Delta = delta I,
    |delta| <= gamma. Larger than the unstructured cone; reduces conservatism."""
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    d = 2 * dim
    Eq = _selector(d, range(dim))
    Ep = _selector(d, range(dim, 2 * dim))
    return MultiplierCone(
        z=dim, s=dim,
        params=(ConeParam("Phi", "psd", dim), ConeParam("Psi", "skew", dim)),
        block_placements={
            "Phi": (BlockPlacement(0.5, Eq, Eq),
                    BlockPlacement(-0.5 / gamma**2, Ep, Ep)),
            "Psi": (BlockPlacement(1.0, Eq, Ep),),
        })


def cone_sector_unstructured(lo: float, hi: float, dim: int) -> MultiplierCone:
    """{phi * [-2*lo*hi*I, (lo+hi)*I; (lo+hi)*I, -2*I] : phi >= 0} for
    symmetric Delta with lo*I <= Delta <= hi*I."""
    if not (0 <= lo <= hi):
        raise ValueError("need 0 <= lo <= hi")
    d = 2 * dim
    G = np.zeros((d, d))
    G[:dim, :dim] = -2.0 * lo * hi * np.eye(dim)
    G[:dim, dim:] = (lo + hi) * np.eye(dim)
    G[dim:, :dim] = (lo + hi) * np.eye(dim)
    G[dim:, dim:] = -2.0 * np.eye(dim)
    return MultiplierCone(z=dim, s=dim, params=(ConeParam("phi", "scalar"),),
                          scalar_generators={"phi": G})


def cone_sector_repeated(lo: float, hi: float, dim: int) -> MultiplierCone:
    """{[-2*lo*hi*Phi, (lo+hi)*Phi; (lo+hi)*Phi, -2*Phi] : Phi PSD} for
    Delta = delta I with lo <= delta <= hi."""
    if not (0 <= lo <= hi):
        raise ValueError("need 0 <= lo <= hi")
    d = 2 * dim
    Eq = _selector(d, range(dim))
    Ep = _selector(d, range(dim, 2 * dim))
    return MultiplierCone(
        z=dim, s=dim, params=(ConeParam("Phi", "psd", dim),),
        block_placements={"Phi": (BlockPlacement(-lo * hi, Eq, Eq),
                                  BlockPlacement(lo + hi, Eq, Ep),
                                  BlockPlacement(-1.0, Ep, Ep))})


def cone_block(cones: Sequence[MultiplierCone]) -> MultiplierCone:
    """Direct sum of block cones with (q, p) permutation bookkeeping.

    Each sub-cone acts on its own (q_i, p_i); the embedding routes those
    into the global stacking [q_1..q_r; p_1..p_r].
    """
    if len(cones) == 0:
        raise ValueError("cone_block needs at least one cone")
    z = sum(c.z for c in cones)
    s = sum(c.s for c in cones)
    dim = z + s
    params: list[ConeParam] = []
    scalar_generators: dict[str, np.ndarray] = {}
    block_placements: dict[str, tuple[BlockPlacement, ...]] = {}
    qoff = 0
    poff = 0
    for i, c in enumerate(cones):
        rows = list(range(qoff, qoff + c.z)) + list(range(z + poff, z + poff + c.s))
        T = _selector(dim, rows)
        for p in c.params:
            name = f"b{i}_{p.name}" if len(cones) > 1 else p.name
            params.append(ConeParam(name, p.kind, p.dim))
            if p.kind == "scalar":
                scalar_generators[name] = T @ c.scalar_generators[p.name] @ T.T
            else:
                block_placements[name] = tuple(
                    BlockPlacement(pl.alpha, T @ pl.left, T @ pl.right)
                    for pl in c.block_placements[p.name])
        qoff += c.z
        poff += c.s
    return MultiplierCone(z=z, s=s, params=tuple(params),
                          scalar_generators=scalar_generators,
                          block_placements=block_placements)


def _recipe_for_block(b: DeltaBlock) -> MultiplierCone:
    if b.kind == "norm_bounded":
        return cone_unstructured_norm_bounded(b.gamma, s=b.rows, z=b.cols)
    if b.kind == "repeated_norm_bounded":
        return cone_repeated_scalar_norm_bounded(b.gamma, dim=b.rows)
    if b.kind == "sector":
        return cone_sector_unstructured(*b.sector, dim=b.rows)
    if b.kind == "repeated_sector":
        return cone_sector_repeated(*b.sector, dim=b.rows)
    raise ValueError(f"unknown block kind {b.kind!r}")


def cone_for_blocks(blocks: Sequence[DeltaBlock]) -> MultiplierCone:
    """Standard multiplier cone for a block-structured uncertainty."""
    return cone_block([_recipe_for_block(b) for b in blocks])


def build_oag_lft(H, Pi, Pi_nom, eta: float, gamma: float) -> tuple[LftSet, MultiplierCone]:
    """LFT model of the gradient-map Jacobians of a soft-limit problem.

    The Jacobian family is H + eta * Pi^T Dq (Pi_nom + Dpi) where Dq is
    diagonal with independent entries in [0, 1] (soft-threshold slopes) and
    ||Dpi|| <= gamma (plant-Jacobian error around the nominal Pi_nom).
    Realized as A=H, B=[eta*Pi^T, 0], C=[Pi_nom; I], D=[0, I; 0, 0] with
    Delta = blkdiag(diag(Dq), Dpi); q stacks (q1 in R^m, q2 in R^n) and
    p stacks (p1 in R^m, p2 in R^m).

    The returned cone has one scalar phi_j per diagonal slope (a [0,1]
    sector multiplier on coordinate j) plus a scalar theta spread as
    theta/m on the q2 identity block and -theta/(m gamma^2) on the p2
    identity block of each summand.
    """
    H = as_matrix(H, "H")
    Pi = as_matrix(Pi, "Pi")
    Pi_nom = as_matrix(Pi_nom, "Pi_nom")
    n = H.shape[0]
    m = Pi.shape[0]
    if H.shape != (n, n) or Pi.shape != (m, n) or Pi_nom.shape != (m, n):
        raise ValueError("dimension mismatch among H, Pi, Pi_nom")
    if not (eta > 0 and gamma > 0):
        raise ValueError("eta and gamma must be positive")
    A = H.copy()
    B = np.hstack([eta * Pi.T, np.zeros((n, m))])
    C = np.vstack([Pi_nom, np.eye(n)])
    D = np.zeros((m + n, 2 * m))
    D[:m, m:] = np.eye(m)
    blocks = tuple(DeltaBlock("repeated_sector", 1, 1, sector=(0.0, 1.0))
                   for _ in range(m))
    blocks += (DeltaBlock("norm_bounded", m, n, gamma=gamma),)
    lft = LftSet(A, B, C, D, blocks)

    z = m + n
    dim = z + m + m
    params = [ConeParam(f"phi_{j}", "scalar") for j in range(m)]
    params.append(ConeParam("theta", "scalar"))
    gens: dict[str, np.ndarray] = {}
    G_theta = np.zeros((dim, dim))
    for j in range(m):
        Gj = np.zeros((dim, dim))
        Gj[j, z + j] = 1.0
        Gj[z + j, j] = 1.0
        Gj[z + j, z + j] = -2.0
        gens[f"phi_{j}"] = Gj
        # each summand carries theta/m on I_n and -theta/(m gamma^2) on I_m
        G_theta[m:m + n, m:m + n] += np.eye(n) / m
        G_theta[z + m:z + 2 * m, z + m:z + 2 * m] += -np.eye(m) / (m * gamma**2)
    gens["theta"] = G_theta
    cone = MultiplierCone(z=z, s=2 * m, params=tuple(params), scalar_generators=gens)
    return lft, cone


def build_smooth_output_lft(H, Pi, Q2, Pi_nom, gamma: float) -> tuple[LftSet, MultiplierCone]:
    """LFT model for a smooth quadratic output term (no soft limits).

    Jacobian family: H + Pi^T Q2 (Pi_nom + Dpi) with ||Dpi|| <= gamma.
    Here the output-gradient slope is fixed (identity), so the only
    uncertainty left is the plant-Jacobian error and the LFT reduces to
    A = H + Pi^T Q2 Pi_nom, B = Pi^T Q2, C = I, D = 0.
    """
    H = as_matrix(H, "H")
    Pi = as_matrix(Pi, "Pi")
    Q2 = as_matrix(Q2, "Q2")
    Pi_nom = as_matrix(Pi_nom, "Pi_nom")
    n = H.shape[0]
    m = Pi.shape[0]
    A = H + Pi.T @ Q2 @ Pi_nom
    B = Pi.T @ Q2
    C = np.eye(n)
    D = np.zeros((n, m))
    blocks = (DeltaBlock("norm_bounded", m, n, gamma=gamma),)
    return LftSet(A, B, C, D, blocks), cone_unstructured_norm_bounded(gamma, s=m, z=n)


def build_oag_polytope(H, Pi, eta: float, plant_vertices: Sequence,
                       cap: int = VERTEX_CAP_DEFAULT) -> PolytopeSet:
    """Vertex enumeration {H + eta Pi^T Q tilde_Pi} over all binary diagonal
    slope patterns Q and plant-Jacobian vertices tilde_Pi.

    The count is len(plant_vertices) * 2^m and blows up quickly; the cap
    turns that into an explicit error rather than a silent stall.
    """
    H = as_matrix(H, "H")
    Pi = as_matrix(Pi, "Pi")
    m = Pi.shape[0]
    verts = [as_matrix(V, "plant vertex") for V in plant_vertices]
    count = len(verts) * 2**m
    if count > cap:
        raise ValueError(
            f"vertex enumeration would produce {count} matrices "
            f"(cap {cap}); use the LFT parameterization instead")
    out = []
    for bits in product((0.0, 1.0), repeat=m):
        Q = np.diag(bits)
        for V in verts:
            out.append(H + eta * Pi.T @ Q @ V)
    return PolytopeSet(tuple(out))


def lft_jacobian(lft: LftSet, Delta) -> np.ndarray:
    """Realized Jacobian A + B Delta (I - D Delta)^{-1} C.

    Computed as B (I - Delta D)^{-1} Delta C via the push-through identity,
    so the two textbook forms agree by construction. Raises if (I - D Delta)
    is singular to tolerance 1e-10.
    """
    Dl = as_matrix(Delta, "Delta")
    if Dl.shape != (lft.s, lft.z):
        raise ValueError(f"Delta must be {lft.s}x{lft.z}, got {Dl.shape}")
    M = np.eye(lft.z) - lft.D @ Dl
    smin = np.linalg.svd(M, compute_uv=False)[-1] if M.size else 1.0
    if smin < 1e-10:
        raise ValueError(f"(I - D Delta) is singular to tolerance (sigma_min={smin:.2e})")
    return lft.A + lft.B @ np.linalg.solve(np.eye(lft.s) - Dl @ lft.D, Dl @ lft.C)


def _random_orthogonal(rng: np.random.Generator, d: int) -> np.ndarray:
    Q, R = np.linalg.qr(rng.standard_normal((d, d)))
    return Q * np.sign(np.diag(R))


def sample_block(b: DeltaBlock, rng: np.random.Generator) -> np.ndarray:
    """One admissible realization of a single uncertainty block."""
    if b.kind == "norm_bounded":
        G = rng.standard_normal((b.rows, b.cols))
        nrm = np.linalg.norm(G, 2)
        scale = 0.0 if nrm == 0 else b.gamma * rng.uniform(0.0, 1.0) / nrm
        return G * scale
    if b.kind == "repeated_norm_bounded":
        return rng.uniform(-b.gamma, b.gamma) * np.eye(b.rows)
    if b.kind == "sector":
        # symmetric with spectrum drawn uniformly in the sector interval
        Q = _random_orthogonal(rng, b.rows)
        return (Q * rng.uniform(b.sector[0], b.sector[1], b.rows)) @ Q.T
    if b.kind == "repeated_sector":
        return rng.uniform(b.sector[0], b.sector[1]) * np.eye(b.rows)
    raise ValueError(f"unknown block kind {b.kind!r}")


def sample_delta(blocks: Sequence[DeltaBlock], rng: np.random.Generator) -> np.ndarray:
    """Random admissible block-diagonal Delta; deterministic per generator state."""
    s = sum(b.rows for b in blocks)
    z = sum(b.cols for b in blocks)
    Dl = np.zeros((s, z))
    r = c = 0
    for b in blocks:
        Dl[r:r + b.rows, c:c + b.cols] = sample_block(b, rng)
        r += b.rows
        c += b.cols
    return Dl


@dataclass(frozen=True)
class IqcReport:
    """Monte-Carlo check of the multiplier positivity contract."""

    min_value: float
    min_trial: int
    trials: int
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.min_value >= -self.tolerance


def iqc_validate(cone: MultiplierCone, blocks: Sequence[DeltaBlock],
                 trials: int, seed: int = 0, tolerance: float = 1e-10) -> IqcReport:
    """Sample (Delta, q, Theta) and report the minimum of [q;p]^T Theta [q;p].

    q is normalized to unit length and parameter samples are O(1), so the
    tolerance is meaningful in absolute terms. This is the falsification
    oracle for every shipped cone recipe.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if cone.s != sum(b.rows for b in blocks) or cone.z != sum(b.cols for b in blocks):
        raise ValueError("cone dimensions do not match the uncertainty structure")
    seeds = np.random.SeedSequence(seed).spawn(trials)
    best = np.inf
    best_trial = -1
    for k in range(trials):
        rng = np.random.default_rng(seeds[k])
        Dl = sample_delta(blocks, rng)
        q = rng.standard_normal(cone.z)
        nq = np.linalg.norm(q)
        if nq > 0:
            q = q / nq
        p = Dl @ q
        Theta = cone.assemble(cone.sample_params(rng))
        v = np.concatenate([q, p])
        val = float(v @ Theta @ v)
        if val < best:
            best = val
            best_trial = k
    return IqcReport(min_value=best, min_trial=best_trial, trials=trials,
                     tolerance=tolerance)
