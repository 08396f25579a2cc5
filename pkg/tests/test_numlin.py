import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fbopt.numlin import (psd_margin, spd_sqrt, spectral_norm, sym_eig,
                          symmetrize, weighted_norm)


def random_symmetric(rng, n, scale=1.0):
    A = rng.standard_normal((n, n)) * scale
    return 0.5 * (A + A.T)


def test_sym_eig_identity():
    se = sym_eig(np.eye(2))
    assert np.allclose(se.eigenvalues, [1.0, 1.0])


def test_sym_eig_hand_2x2():
    # [[11,10],[10,11]] has eigenvalues 11 -+ 10 along (1,-1)/(1,1)
    se = sym_eig([[11.0, 10.0], [10.0, 11.0]])
    assert np.allclose(se.eigenvalues, [1.0, 21.0])


def test_sym_eig_offdiagonal():
    se = sym_eig([[0.0, 1.0], [1.0, 0.0]])
    assert np.allclose(se.eigenvalues, [-1.0, 1.0])


def test_sym_eig_requires_square():
    with pytest.raises(ValueError):
        sym_eig(np.ones((2, 3)))


@given(st.integers(1, 12), st.integers(0, 1000))
def test_sym_eig_reconstruction_and_order(n, seed):
    rng = np.random.default_rng(seed)
    S = random_symmetric(rng, n, scale=10.0)
    se = sym_eig(S)
    R = se.eigenvectors @ np.diag(se.eigenvalues) @ se.eigenvectors.T
    assert np.linalg.norm(R - S, "fro") <= 1e-10 * max(np.linalg.norm(S, "fro"), 1e-30)
    assert np.all(np.diff(se.eigenvalues) >= -1e-12)
    assert np.allclose(se.eigenvectors.T @ se.eigenvectors, np.eye(n), atol=1e-10)


def test_psd_margin_examples():
    assert psd_margin(np.eye(3)) == pytest.approx(1.0)
    assert psd_margin(np.zeros((2, 2))) == pytest.approx(0.0)
    assert psd_margin(np.diag([2.0, -0.5])) == pytest.approx(-0.5)


def test_psd_margin_rayleigh_lower_bound(rng):
    # lambda_min lower-bounds x^T S x over unit vectors, any sample set
    for n in (2, 5, 20):
        S = random_symmetric(rng, n, scale=3.0)
        lam = psd_margin(S)
        X = rng.standard_normal((10_000, n))
        X /= np.linalg.norm(X, axis=1, keepdims=True)
        sampled = np.einsum("ki,ij,kj->k", X, S, X).min()
        assert lam <= sampled + 1e-8


def test_psd_margin_matches_fine_grid_2d(rng):
    # dim 2: a 1e5-point angle grid pins the Rayleigh minimum to ~1e-10
    S = random_symmetric(rng, 2, scale=2.0)
    t = np.linspace(0.0, np.pi, 100_000)
    X = np.stack([np.cos(t), np.sin(t)], axis=1)
    grid_min = np.einsum("ki,ij,kj->k", X, S, X).min()
    assert psd_margin(S) == pytest.approx(grid_min, abs=1e-8)


def test_spectral_norm_examples():
    assert spectral_norm(np.eye(2)) == pytest.approx(1.0)
    assert spectral_norm(np.diag([3.0, -4.0])) == pytest.approx(4.0)
    assert spectral_norm([[0.0, 2.0], [0.0, 0.0]]) == pytest.approx(2.0)


@given(st.integers(1, 8), st.integers(1, 8), st.integers(0, 500))
def test_spectral_norm_vs_gram_eigenvalue(n, m, seed):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((n, m)) * 5.0
    lam_max = float(np.linalg.eigvalsh(M.T @ M)[-1])
    assert spectral_norm(M) ** 2 == pytest.approx(lam_max, rel=1e-10, abs=1e-12)


def test_symmetrize_rejects_nonfinite():
    with pytest.raises(ValueError):
        symmetrize([[np.nan, 0.0], [0.0, 1.0]])


def test_spd_sqrt_roundtrip(rng):
    G = rng.standard_normal((4, 4))
    P = G @ G.T + 0.5 * np.eye(4)
    Ph, Pih = spd_sqrt(P)
    assert np.allclose(Ph @ Ph, P, atol=1e-10)
    assert np.allclose(Ph @ Pih, np.eye(4), atol=1e-10)
    with pytest.raises(ValueError):
        spd_sqrt(np.diag([1.0, -1.0]))


def test_weighted_norm():
    P = np.diag([4.0, 1.0])
    assert weighted_norm([1.0, 0.0], P) == pytest.approx(2.0)
    assert weighted_norm([3.0, 4.0]) == pytest.approx(5.0)
