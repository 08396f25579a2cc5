"""Robust monotonicity certification over Jacobian uncertainty sets.

Two tests are provided, both sufficient conditions delivered as matrix
inequalities in a structured weighting P and (for the LFT test) multiplier
parameters:

* polytopic: 0.5 (J_i^T P + P J_i) >= rho P at every vertex J_i certifies
  rho-strong monotonicity of every map whose generalized Jacobians stay in
  the hull;
* LFT: with A_rho = A - rho I and the stacked selector [C D; 0 I],

      [A_rho^T P + P A_rho, P B; B^T P, 0]
        - [C D; 0 I]^T Theta [C D; 0 I] >= 0

  for some Theta in the multiplier cone certifies the same over the whole
  LFT family.

The weighting is constrained to the class compatible with Euclidean
projections on the set partition: full block on free coordinates, diagonal
on box coordinates, exact identity on general convex blocks. Certificates
carry rho, a Lipschitz constant, the step-size rule tau* = rho / L^2 and
tau_max = 2 rho / L^2, and are re-verified by eigensolves and by Delta
sampling before anyone should act on them. Infeasibility of either test
proves nothing (the conditions are sufficient only).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from . import lmi
from .numlin import psd_margin, spd_sqrt, spectral_norm, symmetrize
from .problem import FeasibleSet
from .uncertainty import LftSet, MultiplierCone, PolytopeSet, lft_jacobian, sample_delta
from .vi import recommend_step

__all__ = [
    "Certificate",
    "CertifyOutcome",
    "ValidationReport",
    "weight_structure",
    "certify_polytopic",
    "certify_lft",
    "lipschitz_bound",
    "lipschitz_sampled",
    "validate_certificate",
    "sampled_monotonicity",
]

BISECT_TOL_POLY = 1e-6
BISECT_TOL_LFT = 1e-4
_FEAS_EPS = 1e-9          # relative margin treated as feasible during bisection
_POLISH_GUARD = 1e-9


@dataclass
class Certificate:
    """Verified robust-monotonicity certificate.

    ``lipschitz_source`` is "polytope_exact" when L is the exact maximum of
    the weighted norm over hull vertices, or "sampled_inflated" when it is
    an empirical estimate from Delta sampling with a 5% safety factor (the
    LFT case, where no exact bound is computed).
    """

    P: np.ndarray
    rho: float
    L: float
    tau_star: float
    tau_max: float
    margin: float
    theta_params: dict | None = None
    lipschitz_source: str = "polytope_exact"
    provenance: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        theta = None
        if self.theta_params is not None:
            theta = {k: (v.tolist() if isinstance(v, np.ndarray) else float(v))
                     for k, v in self.theta_params.items()}
        return {"P": self.P.tolist(), "rho": self.rho, "L": self.L,
                "tau_star": self.tau_star, "tau_max": self.tau_max,
                "margin": self.margin, "theta_params": theta,
                "lipschitz_source": self.lipschitz_source,
                "provenance": dict(self.provenance)}

    @staticmethod
    def from_json_dict(d: dict) -> "Certificate":
        theta = d.get("theta_params")
        if theta is not None:
            theta = {k: (np.asarray(v, dtype=float) if isinstance(v, list) else float(v))
                     for k, v in theta.items()}
        return Certificate(P=np.asarray(d["P"], dtype=float), rho=float(d["rho"]),
                           L=float(d["L"]), tau_star=float(d["tau_star"]),
                           tau_max=float(d["tau_max"]), margin=float(d["margin"]),
                           theta_params=theta,
                           lipschitz_source=d.get("lipschitz_source", "polytope_exact"),
                           provenance=d.get("provenance", {}))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @staticmethod
    def load(path) -> "Certificate":
        with open(path) as fh:
            return Certificate.from_json_dict(json.load(fh))


@dataclass
class CertifyOutcome:
    feasible: bool
    certificate: Certificate | None
    solution: lmi.LmiSolution | None
    message: str = ""


def weight_structure(partition: FeasibleSet):
    """Scalar basis of the admissible weighting class for a set partition.

    Returns (names, basis matrices, fixed part, trace normalization or None).
    The fixed part is the identity on general-block coordinates; the basis
    spans a full symmetric block on free coordinates and a diagonal on box
    coordinates. The normalization pins the overall scale only when the
    whole weighting is variable (no general blocks), where the program is
    homogeneous.
    """
    n = partition.dim
    free, box, general = partition.slices()
    names: list[str] = []
    basis: list[np.ndarray] = []
    for i in range(free.start, free.stop):
        for j in range(i, free.stop):
            E = np.zeros((n, n))
            E[i, j] = E[j, i] = 1.0
            names.append(f"p_free_{i}_{j}")
            basis.append(E)
    for k in range(box.start, box.stop):
        E = np.zeros((n, n))
        E[k, k] = 1.0
        names.append(f"p_box_{k}")
        basis.append(E)
    fixed = np.zeros((n, n))
    gen_idx = np.arange(general.start, general.stop)
    fixed[gen_idx, gen_idx] = 1.0
    normalization = None
    if partition.n_general == 0 and names:
        coeffs = {nm: float(np.trace(E)) for nm, E in zip(names, basis)}
        normalization = lmi.TraceEquality(coeffs, float(n))
    return names, basis, fixed, normalization


def _assemble_P(names, basis, fixed, values) -> np.ndarray:
    P = fixed.copy()
    for nm, E in zip(names, basis):
        P = P + float(values[nm]) * E
    return symmetrize(P)


def _poly_program(polytope: PolytopeSet, partition: FeasibleSet, rho: float) -> lmi.LmiProgram:
    names, basis, fixed, normalization = weight_structure(partition)
    variables = tuple(lmi.VarSpec(nm, "scalar_free") for nm in names)
    constraints = []
    for i, J in enumerate(polytope.vertices):
        const = symmetrize(J.T @ fixed + fixed @ J) * 0.5 - rho * fixed
        terms = {nm: symmetrize(J.T @ E + E @ J) * 0.5 - rho * E
                 for nm, E in zip(names, basis)}
        constraints.append(lmi.Constraint(f"vertex_{i}", const, terms))
    # P itself must be positive definite; shifted by the common margin
    constraints.append(lmi.Constraint(
        "P_pos", fixed, {nm: E for nm, E in zip(names, basis)}))
    norms = (normalization,) if normalization else ()
    return lmi.LmiProgram(variables, tuple(constraints), norms)


def _poly_rho_for_weight(polytope: PolytopeSet, P: np.ndarray) -> float:
    """Largest rho certified by a fixed weighting: the minimum generalized
    eigenvalue of (sym(J^T P + P J)/2, P) over vertices."""
    rho = np.inf
    for J in polytope.vertices:
        S = symmetrize(J.T @ P + P @ J) * 0.5
        rho = min(rho, float(scipy.linalg.eigh(S, P, eigvals_only=True)[0]))
    return rho


def _finish_certificate(P, rho, margin, theta, source, L, provenance) -> Certificate:
    if rho > 0:
        rule = recommend_step(rho, max(L, rho))
        tau_star, tau_max = rule.tau_star, rule.tau_max
    else:
        # monotone but not strongly: no contraction step to recommend
        tau_star = tau_max = float("nan")
    return Certificate(P=P, rho=rho, L=max(L, rho), tau_star=tau_star,
                       tau_max=tau_max, margin=margin, theta_params=theta,
                       lipschitz_source=source, provenance=provenance)


def certify_polytopic(polytope: PolytopeSet, partition: FeasibleSet,
                      mode: str = "maximize", rho: float | None = None,
                      eps: float = lmi.DEFAULT_EPS, solver: str = lmi.DEFAULT_SOLVER,
                      bisect_tol: float = BISECT_TOL_POLY) -> CertifyOutcome:
    """Vertex-wise monotonicity test, checking a given rho or maximizing it.

    Maximize mode bisects rho on [0, max_i lambda_max(sym J_i)], then
    polishes each feasible weighting with an exact generalized-eigenvalue
    step, so the returned rho is limited by the weighting class rather than
    by the bisection grid. Feasibility is decided on independently
    recomputed margins at every step.
    """
    if polytope.dim != partition.dim:
        raise ValueError("polytope dimension does not match the partition")
    sym_tops = [float(np.linalg.eigvalsh(symmetrize(J))[-1]) for J in polytope.vertices]
    names, basis, fixed, _ = weight_structure(partition)

    def attempt(r: float):
        prog = _poly_program(polytope, partition, r)
        sol = lmi.solve_feasibility(prog, eps=_FEAS_EPS, solver=solver)
        if not sol.values:
            return None, sol, prog
        if sol.margin < _FEAS_EPS * prog.scale():
            return None, sol, prog
        if not lmi.verify_solution(prog, sol).ok:
            return None, sol, prog
        return _assemble_P(names, basis, fixed, sol.values), sol, prog

    if mode == "check":
        if rho is None:
            raise ValueError("check mode needs rho")
        prog = _poly_program(polytope, partition, rho)
        sol = lmi.solve_feasibility(prog, eps=eps, solver=solver)
        if sol.status != "feasible" or not sol.values:
            return CertifyOutcome(False, None, sol,
                                  f"not certifiable at rho={rho} "
                                  "(the test is sufficient only)")
        if not lmi.verify_solution(prog, sol).ok:
            return CertifyOutcome(False, None, sol, "solution failed re-verification")
        P = _assemble_P(names, basis, fixed, sol.values)
        L = lipschitz_bound(polytope.vertices, P)
        cert = _finish_certificate(P, rho, sol.margin, None, "polytope_exact", L,
                                   {"program_sha256": prog.sha256(), "mode": "check",
                                    "solver": solver})
        return CertifyOutcome(True, cert, sol)

    if mode != "maximize":
        raise ValueError(f"unknown mode {mode!r}")

    P0, sol0, prog0 = attempt(0.0)
    if P0 is None:
        return CertifyOutcome(False, None, sol0,
                              "not robustly monotone over this polytope "
                              "(infeasible at rho=0)")
    best_rho = _poly_rho_for_weight(polytope, P0)
    best_P = P0
    lo, hi = max(0.0, best_rho), max(sym_tops) + bisect_tol
    lowest_infeasible = np.inf
    probe_near_best = True  # the polished level is usually already optimal
    while hi - lo > bisect_tol:
        if probe_near_best:
            mid = min(lo + bisect_tol, 0.5 * (lo + hi))
            probe_near_best = False
        else:
            mid = 0.5 * (lo + hi)
        P, sol, _ = attempt(mid)
        if P is not None:
            cand = _poly_rho_for_weight(polytope, P)
            if cand > lowest_infeasible + 1e-9:
                raise RuntimeError(
                    "bisection monotonicity violated: verified feasible "
                    f"rho={cand} above reported-infeasible rho={lowest_infeasible}")
            if cand > best_rho + bisect_tol:
                probe_near_best = True
            if cand > best_rho:
                best_rho, best_P = cand, P
            lo = max(lo, mid, min(cand, hi))
        else:
            lowest_infeasible = min(lowest_infeasible, mid)
            hi = mid
    rho_out = best_rho - _POLISH_GUARD * max(1.0, abs(best_rho))
    final_margin = min(psd_margin(symmetrize(J.T @ best_P + best_P @ J) * 0.5
                                  - rho_out * best_P)
                       for J in polytope.vertices)
    prog_final = _poly_program(polytope, partition, rho_out)
    L = lipschitz_bound(polytope.vertices, best_P)
    cert = _finish_certificate(best_P, rho_out, final_margin, None,
                               "polytope_exact", L,
                               {"program_sha256": prog_final.sha256(),
                                "mode": "maximize", "solver": solver})
    return CertifyOutcome(True, cert, sol0)


def _cone_lmi_parts(cone: MultiplierCone, W: np.ndarray):
    """Translate cone parameters into program variables and constraint terms
    for the congruence -W^T Theta W appearing in the LFT test."""
    variables: list[lmi.VarSpec] = []
    scalar_terms: dict[str, np.ndarray] = {}
    block_terms: dict[str, tuple[lmi.BlockTerm, ...]] = {}
    for p in cone.params:
        if p.kind == "scalar":
            name = f"cone_{p.name}"
            variables.append(lmi.VarSpec(name, "scalar_nonneg"))
            scalar_terms[name] = -symmetrize(W.T @ cone.scalar_generators[p.name] @ W)
        elif p.kind == "psd":
            name = f"cone_{p.name}"
            variables.append(lmi.VarSpec(name, "psd", p.dim))
            block_terms[name] = tuple(
                lmi.BlockTerm(-pl.alpha, W.T @ pl.left, W.T @ pl.right)
                for pl in cone.block_placements[p.name])
        elif p.kind == "skew":
            # expand a skew block into its strict upper-triangle scalars
            for i in range(p.dim):
                for j in range(i + 1, p.dim):
                    name = f"cone_{p.name}_{i}_{j}"
                    variables.append(lmi.VarSpec(name, "scalar_free"))
                    X = np.zeros((p.dim, p.dim))
                    X[i, j], X[j, i] = 1.0, -1.0
                    G = np.zeros((cone.dim, cone.dim))
                    for pl in cone.block_placements[p.name]:
                        M = pl.alpha * (pl.left @ X @ pl.right.T)
                        G += M + M.T
                    scalar_terms[name] = -symmetrize(W.T @ G @ W)
        else:
            raise ValueError(f"unknown cone parameter kind {p.kind!r}")
    return variables, scalar_terms, block_terms


def _cone_values_from_solution(cone: MultiplierCone, values: dict) -> dict:
    out: dict = {}
    for p in cone.params:
        if p.kind in ("scalar", "psd"):
            out[p.name] = values[f"cone_{p.name}"]
        else:
            X = np.zeros((p.dim, p.dim))
            for i in range(p.dim):
                for j in range(i + 1, p.dim):
                    v = float(values[f"cone_{p.name}_{i}_{j}"])
                    X[i, j], X[j, i] = v, -v
            out[p.name] = X
    return out


def _lft_program(lft: LftSet, cone: MultiplierCone, partition: FeasibleSet,
                 rho: float) -> tuple[lmi.LmiProgram, tuple]:
    n, s, z = lft.n, lft.s, lft.z
    names, basis, fixed, normalization = weight_structure(partition)
    W = np.block([[lft.C, lft.D], [np.zeros((s, n)), np.eye(s)]])
    Ar = lft.A - rho * np.eye(n)

    def top(E: np.ndarray) -> np.ndarray:
        M = np.zeros((n + s, n + s))
        M[:n, :n] = Ar.T @ E + E @ Ar
        M[:n, n:] = E @ lft.B
        M[n:, :n] = lft.B.T @ E
        return symmetrize(M)

    cone_vars, cone_scalar, cone_block_terms = _cone_lmi_parts(cone, W)
    variables = tuple(lmi.VarSpec(nm, "scalar_free") for nm in names) + tuple(cone_vars)
    scalar_terms = {nm: top(E) for nm, E in zip(names, basis)}
    scalar_terms.update(cone_scalar)
    main = lmi.Constraint("lft_test", top(fixed), scalar_terms, cone_block_terms)
    constraints = [main]
    if names:
        constraints.append(lmi.Constraint(
            "P_pos", fixed, {nm: E for nm, E in zip(names, basis)}))
    norms = (normalization,) if (normalization and names) else ()
    prog = lmi.LmiProgram(variables, tuple(constraints), norms)
    return prog, (names, basis, fixed)


def _lft_rho_for_solution(lft: LftSet, cone: MultiplierCone, P: np.ndarray,
                          theta_values: dict, rho_feasible: float) -> float:
    """Largest rho the fixed (P, Theta) pair certifies, by eigenvalue
    bisection on the affine pencil M(rho) = M(rho=0) - 2 rho blkdiag(P, 0)."""
    n, s = lft.n, lft.s
    W = np.block([[lft.C, lft.D], [np.zeros((s, n)), np.eye(s)]])
    Theta = cone.assemble(theta_values)
    M0 = np.zeros((n + s, n + s))
    M0[:n, :n] = lft.A.T @ P + P @ lft.A
    M0[:n, n:] = P @ lft.B
    M0[n:, :n] = lft.B.T @ P
    M0 = symmetrize(M0 - W.T @ Theta @ W)
    N = np.zeros((n + s, n + s))
    N[:n, :n] = 2.0 * P

    def ok(r: float) -> bool:
        return psd_margin(M0 - r * N) >= 0.0

    if not ok(rho_feasible):
        return rho_feasible
    lo, hi = rho_feasible, max(rho_feasible, 1.0)
    for _ in range(60):
        if not ok(hi):
            break
        lo, hi = hi, 2.0 * hi
    else:
        return lo
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


def certify_lft(lft: LftSet, cone: MultiplierCone, partition: FeasibleSet,
                rho: float | None = None, mode: str = "check",
                eps: float = lmi.DEFAULT_EPS, solver: str = lmi.DEFAULT_SOLVER,
                bisect_tol: float = BISECT_TOL_LFT, lipschitz_samples: int = 200,
                seed: int = 0) -> CertifyOutcome:
    """Single-LMI robust monotonicity test over an LFT Jacobian family.

    check mode decides feasibility at the given rho; maximize mode bisects
    on rho (the inequality is affine in the variables only for fixed rho)
    and polishes with an eigenvalue sweep at the found (P, Theta).
    Infeasibility proves nothing: the test is a sufficient condition.

    The certificate's Lipschitz constant is estimated from sampled Delta
    realizations and inflated by 5%, and is flagged as empirical.
    """
    if lft.n != partition.dim:
        raise ValueError("LFT dimension does not match the partition")
    if cone.z != lft.z or cone.s != lft.s:
        raise ValueError("cone dimensions do not match the LFT")
    names, basis, fixed, _ = weight_structure(partition)

    def attempt(r: float, strict_eps: float):
        prog, (nm, bs, fx) = _lft_program(lft, cone, partition, r)
        sol = lmi.solve_feasibility(prog, eps=strict_eps, solver=solver)
        if sol.status != "feasible" or not sol.values:
            return None, sol, prog
        if not lmi.verify_solution(prog, sol).ok:
            return None, sol, prog
        P = _assemble_P(nm, bs, fx, sol.values)
        if psd_margin(P) <= 0:
            return None, sol, prog
        theta = _cone_values_from_solution(cone, sol.values)
        return (P, theta), sol, prog

    def finish(P, theta, r, sol, prog, mode_label):
        L = lipschitz_sampled(lft, P, samples=lipschitz_samples, seed=seed)
        margin = sol.margin
        cert = _finish_certificate(P, r, margin, theta, "sampled_inflated", L,
                                   {"program_sha256": prog.sha256(),
                                    "mode": mode_label, "solver": solver,
                                    "seed": seed})
        return CertifyOutcome(True, cert, sol)

    if mode == "check":
        if rho is None:
            raise ValueError("check mode needs rho")
        got, sol, prog = attempt(rho, eps)
        if got is None:
            return CertifyOutcome(
                False, None, sol,
                f"LFT test infeasible at rho={rho}; this proves nothing "
                "(the condition is sufficient only)")
        P, theta = got
        return finish(P, theta, rho, sol, prog, "check")

    if mode != "maximize":
        raise ValueError(f"unknown mode {mode!r}")

    got0, sol0, prog0 = attempt(0.0, _FEAS_EPS)
    if got0 is None:
        return CertifyOutcome(False, None, sol0,
                              "LFT test infeasible at rho=0; this proves "
                              "nothing (the condition is sufficient only)")
    P_best, theta_best = got0
    best_rho = _lft_rho_for_solution(lft, cone, P_best, theta_best, 0.0)
    best_sol, best_prog = sol0, prog0
    # bracket: any realized Jacobian caps the certifiable rho
    rng = np.random.default_rng(seed)
    cap = min(float(np.linalg.eigvalsh(
        symmetrize(lft_jacobian(lft, sample_delta(lft.blocks, rng))))[-1])
        for _ in range(16))
    lo, hi = max(0.0, best_rho), cap + bisect_tol
    probe_near_best = True  # the polished level is usually already optimal
    while hi - lo > bisect_tol:
        if probe_near_best:
            mid = min(lo + bisect_tol, 0.5 * (lo + hi))
            probe_near_best = False
        else:
            mid = 0.5 * (lo + hi)
        got, sol, prog = attempt(mid, _FEAS_EPS)
        if got is not None:
            P, theta = got
            cand = _lft_rho_for_solution(lft, cone, P, theta, mid)
            if cand > best_rho + bisect_tol:
                probe_near_best = True
            if cand > best_rho:
                best_rho, P_best, theta_best = cand, P, theta
                best_sol, best_prog = sol, prog
            lo = max(lo, mid, min(cand, hi))
        else:
            hi = mid
    rho_out = best_rho - _POLISH_GUARD * max(1.0, abs(best_rho))
    return finish(P_best, theta_best, rho_out, best_sol, best_prog, "maximize")


def lipschitz_bound(vertices: Sequence[np.ndarray], P) -> float:
    """Exact weighted Lipschitz constant over a matrix polytope.

    max_J ||P^{1/2} J P^{-1/2}||_2; the norm is convex in J, so the maximum
    over the hull is attained at a vertex. Equivalent to the smallest L with
    J^T P J <= L^2 P for all hull members.
    """
    Ph, Pih = spd_sqrt(P)
    return max(spectral_norm(Ph @ np.asarray(J, dtype=float) @ Pih) for J in vertices)


def lipschitz_sampled(lft: LftSet, P, samples: int = 200, seed: int = 0,
                      inflation: float = 1.05) -> float:
    """Empirical weighted Lipschitz estimate over sampled Delta realizations,
    inflated by a safety factor. No exactness is claimed."""
    Ph, Pih = spd_sqrt(P)
    # distinct stream from the certification seed
    seeds = np.random.SeedSequence([seed, 0x4C69]).spawn(samples)
    worst = 0.0
    for sd in seeds:
        J = lft_jacobian(lft, sample_delta(lft.blocks, np.random.default_rng(sd)))
        worst = max(worst, spectral_norm(Ph @ J @ Pih))
    return inflation * worst


@dataclass
class ValidationReport:
    passed: bool
    checked: int
    worst_margin: float
    tolerance: float
    counterexample: np.ndarray | None = None


def validate_certificate(cert: Certificate, unc, trials: int = 1000,
                         seed: int = 0, tolerance: float = 1e-8) -> ValidationReport:
    """Sample the uncertainty set and check the certified inequality.

    Every realized Jacobian J must satisfy
    psd_margin(0.5 (J^T P + P J) - rho P) >= -tolerance; a violating sample
    rejects the certificate and is attached to the report.
    """
    P, rho = cert.P, cert.rho
    worst = np.inf
    worst_J = None
    checked = 0

    def margin_of(J: np.ndarray) -> float:
        return psd_margin(symmetrize(J.T @ P + P @ J) * 0.5 - rho * P)

    if isinstance(unc, PolytopeSet):
        samples = list(unc.vertices)
        rng = np.random.default_rng(seed)
        for _ in range(max(0, trials - len(samples))):
            wts = rng.dirichlet(np.ones(len(unc.vertices)))
            samples.append(sum(w * V for w, V in zip(wts, unc.vertices)))
        for J in samples:
            checked += 1
            m = margin_of(J)
            if m < worst:
                worst, worst_J = m, J
    elif isinstance(unc, LftSet):
        seeds = np.random.SeedSequence(seed).spawn(trials)
        for sd in seeds:
            J = lft_jacobian(unc, sample_delta(unc.blocks, np.random.default_rng(sd)))
            checked += 1
            m = margin_of(J)
            if m < worst:
                worst, worst_J = m, J
    else:
        raise TypeError(f"unsupported uncertainty set type {type(unc).__name__}")

    passed = worst >= -tolerance
    return ValidationReport(passed=passed, checked=checked, worst_margin=float(worst),
                            tolerance=tolerance,
                            counterexample=None if passed else worst_J)


def sampled_monotonicity(jacobian_samples: Sequence[np.ndarray], P) -> float:
    """Empirical monotonicity level over sampled Jacobians.

    Minimum over samples of the largest rho with
    0.5 (J^T P + P J) >= rho P, via a generalized eigensolve. An empirical
    surrogate only; a certified rho must never exceed it.
    """
    samples = list(jacobian_samples)
    if not samples:
        raise ValueError("need at least one Jacobian sample")
    Pm = symmetrize(P, "P")
    if psd_margin(Pm) <= 0:
        raise ValueError("P must be positive definite")
    rho = np.inf
    for J in samples:
        S = symmetrize(np.asarray(J, dtype=float).T @ Pm + Pm @ np.asarray(J, dtype=float)) * 0.5
        rho = min(rho, float(scipy.linalg.eigh(S, Pm, eigvals_only=True)[0]))
    return rho
