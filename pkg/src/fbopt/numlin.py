"""Dense symmetric linear-algebra kernels used throughout the package.

Everything here operates on plain ``numpy`` arrays with value semantics;
inputs are never mutated, so calls are safe from concurrent contexts.
Problem sizes are desk scale (n, m up to a few hundred), dense storage only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SymEig",
    "as_matrix",
    "symmetrize",
    "sym_eig",
    "psd_margin",
    "spectral_norm",
    "spd_sqrt",
    "weighted_norm",
]


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-d float array."""
    M = np.asarray(a, dtype=float)
    if M.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {M.shape}")
    if M.size and not np.all(np.isfinite(M)):
        raise ValueError(f"{name} contains non-finite entries")
    return M


def symmetrize(S, name: str = "matrix") -> np.ndarray:
    """Return (S + S^T)/2, requiring a square input.

    LMI assembly accumulates asymmetry at round-off level, so every
    symmetric eigensolve in this package goes through here first.
    """
    M = as_matrix(S, name)
    if M.shape[0] != M.shape[1]:
        raise ValueError(f"{name} must be square, got shape {M.shape}")
    return 0.5 * (M + M.T)


@dataclass(frozen=True)
class SymEig:
    """Eigendecomposition of a symmetric matrix.

    ``eigenvalues`` is ascending; ``eigenvectors`` has orthonormal columns
    so that ``V @ diag(w) @ V.T`` reconstructs the (symmetrized) input.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def sym_eig(S) -> SymEig:
    """Eigendecomposition of the symmetrized input, eigenvalues ascending."""
    w, V = np.linalg.eigh(symmetrize(S))
    return SymEig(eigenvalues=w, eigenvectors=V)


def psd_margin(S) -> float:
    """Smallest eigenvalue of the symmetrized input.

    The input is positive semidefinite iff the result is >= 0.
    """
    M = symmetrize(S)
    if M.shape[0] == 0:
        return float("inf")
    return float(np.linalg.eigvalsh(M)[0])


def spectral_norm(M) -> float:
    """Largest singular value; zero for empty matrices."""
    A = as_matrix(M)
    if A.size == 0:
        return 0.0
    return float(np.linalg.norm(A, 2))


def spd_sqrt(P) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric square root and inverse square root of an SPD matrix.

    Raises if P is not (numerically) positive definite.
    """
    w, V = np.linalg.eigh(symmetrize(P, "P"))
    if w[0] <= 0:
        raise ValueError(f"matrix is not positive definite (lambda_min={w[0]:.3e})")
    sq = np.sqrt(w)
    return (V * sq) @ V.T, (V / sq) @ V.T


def weighted_norm(x, P: np.ndarray | None = None) -> float:
    """P-weighted Euclidean norm; plain 2-norm when P is None."""
    v = np.asarray(x, dtype=float).ravel()
    if P is None:
        return float(np.linalg.norm(v))
    return float(np.sqrt(max(v @ np.asarray(P, dtype=float) @ v, 0.0)))
