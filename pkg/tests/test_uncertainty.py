import numpy as np
import pytest

from fbopt.plants import AcademicPlant
from fbopt.uncertainty import (DeltaBlock, LftSet, PolytopeSet, build_oag_lft,
                               build_oag_polytope, build_smooth_output_lft,
                               cone_block, cone_for_blocks,
                               cone_repeated_scalar_norm_bounded,
                               cone_sector_repeated, cone_sector_unstructured,
                               cone_unstructured_norm_bounded, iqc_validate,
                               lft_jacobian, sample_delta)


def quad_form(theta, q, p):
    v = np.concatenate([np.atleast_1d(q), np.atleast_1d(p)])
    return float(v @ theta @ v)


# --- cone recipes -----------------------------------------------------------

def test_unstructured_norm_bounded_scalar_cases():
    cone = cone_unstructured_norm_bounded(1.0, s=1, z=1)
    theta = cone.assemble({"theta": 1.0})
    assert quad_form(theta, [2.0], [1.0]) == pytest.approx(3.0)  # 4 - 1
    cone2 = cone_unstructured_norm_bounded(2.0, s=1, z=1)
    theta2 = cone2.assemble({"theta": 1.0})
    assert quad_form(theta2, [1.0], [2.0]) == pytest.approx(0.0)  # boundary


def test_unstructured_norm_bounded_montecarlo():
    blocks = (DeltaBlock("norm_bounded", 3, 2, gamma=1.5),)
    cone = cone_unstructured_norm_bounded(1.5, s=3, z=2)
    rep = iqc_validate(cone, blocks, trials=2000, seed=0)
    assert rep.passed, rep.min_value


def test_repeated_scalar_reduces_to_unstructured():
    cone_rs = cone_repeated_scalar_norm_bounded(2.0, dim=3)
    cone_u = cone_unstructured_norm_bounded(2.0, s=3, z=3)
    theta_rs = cone_rs.assemble({"Phi": np.eye(3), "Psi": np.zeros((3, 3))})
    theta_u = cone_u.assemble({"theta": 1.0})
    assert np.allclose(theta_rs, theta_u)


def test_repeated_scalar_boundary_skew_cancellation(rng):
    # at delta = gamma the Phi terms cancel; only the skew term survives and
    # vanishes by antisymmetry
    gamma, d = 1.5, 4
    cone = cone_repeated_scalar_norm_bounded(gamma, dim=d)
    vals = cone.sample_params(rng)
    theta = cone.assemble(vals)
    q = rng.standard_normal(d)
    p = gamma * q
    assert quad_form(theta, q, p) == pytest.approx(0.0, abs=1e-10)


def test_repeated_scalar_montecarlo():
    blocks = (DeltaBlock("repeated_norm_bounded", 3, 3, gamma=0.8),)
    cone = cone_repeated_scalar_norm_bounded(0.8, dim=3)
    rep = iqc_validate(cone, blocks, trials=2000, seed=1)
    assert rep.passed, rep.min_value


def test_sector_unstructured_scalar_arithmetic():
    cone = cone_sector_unstructured(0.0, 1.0, dim=1)
    theta = cone.assemble({"phi": 1.0})
    # -2*0*1*1 + 2*(0+1)*1*0.5 - 2*0.25 = 0.5
    assert quad_form(theta, [1.0], [0.5]) == pytest.approx(0.5)


def test_sector_unstructured_degenerate_point():
    c = 1.3
    cone = cone_sector_unstructured(c, c, dim=2)
    theta = cone.assemble({"phi": 0.7})
    q = np.array([1.0, -2.0])
    assert quad_form(theta, q, c * q) == pytest.approx(0.0, abs=1e-12)


def test_sector_unstructured_montecarlo():
    blocks = (DeltaBlock("sector", 3, 3, sector=(0.2, 1.7)),)
    cone = cone_sector_unstructured(0.2, 1.7, dim=3)
    rep = iqc_validate(cone, blocks, trials=2000, seed=2)
    assert rep.passed, rep.min_value


def test_sector_repeated_boundaries(rng):
    lo, hi, d = 0.3, 2.0, 3
    cone = cone_sector_repeated(lo, hi, dim=d)
    Phi = cone.sample_params(rng)["Phi"]
    theta = cone.assemble({"Phi": Phi})
    q = rng.standard_normal(d)
    for delta in (lo, hi):
        assert quad_form(theta, q, delta * q) == pytest.approx(0.0, abs=1e-10)


def test_sector_repeated_montecarlo():
    blocks = (DeltaBlock("repeated_sector", 3, 3, sector=(0.0, 1.0)),)
    cone = cone_sector_repeated(0.0, 1.0, dim=3)
    rep = iqc_validate(cone, blocks, trials=2000, seed=3)
    assert rep.passed, rep.min_value


def test_cone_recipe_preconditions():
    with pytest.raises(ValueError):
        cone_unstructured_norm_bounded(0.0, 1, 1)
    with pytest.raises(ValueError):
        cone_sector_unstructured(2.0, 1.0, 1)


# --- block composition --------------------------------------------------------

def test_cone_block_single_is_identity_embedding(rng):
    base = cone_unstructured_norm_bounded(1.0, s=2, z=3)
    blocked = cone_block([base])
    vals = base.sample_params(rng)
    assert np.allclose(base.assemble(vals), blocked.assemble(vals))


def test_cone_block_two_scalars_interleaved_layout():
    # global stacking [q1 q2 p1 p2] interleaves the per-block (q, p) pairs
    c1 = cone_sector_repeated(0.0, 1.0, dim=1)
    c2 = cone_sector_repeated(0.0, 1.0, dim=1)
    blocked = cone_block([c1, c2])
    theta = blocked.assemble({"b0_Phi": np.array([[2.0]]),
                              "b1_Phi": np.array([[3.0]])})
    expect = np.zeros((4, 4))
    expect[0, 2] = expect[2, 0] = 2.0
    expect[2, 2] = -4.0
    expect[1, 3] = expect[3, 1] = 3.0
    expect[3, 3] = -6.0
    assert np.allclose(theta, expect)


def test_oag_cone_equals_block_of_recipes(rng):
    # eq-by-generators: the verbatim cone equals cone_block of m scalar
    # [0,1]-sector recipes plus one unstructured norm-bounded recipe
    H = np.eye(2)
    Pi = np.array([[1.0, 1.0], [-1.0, 1.0]])
    lft, cone = build_oag_lft(H, Pi, Pi, eta=10.0, gamma=0.5)
    m = 2
    parts = [cone_sector_repeated(0.0, 1.0, dim=1) for _ in range(m)]
    parts.append(cone_unstructured_norm_bounded(0.5, s=m, z=2))
    blocked = cone_block(parts)
    for _ in range(5):
        phis = rng.uniform(0, 2, m)
        th = rng.uniform(0, 2)
        v1 = cone.assemble({**{f"phi_{j}": phis[j] for j in range(m)}, "theta": th})
        v2 = blocked.assemble({**{f"b{j}_Phi": np.array([[phis[j]]]) for j in range(m)},
                               f"b{m}_theta": th})
        assert np.allclose(v1, v2)


def test_cone_for_blocks_dispatch():
    blocks = (DeltaBlock("repeated_sector", 1, 1, sector=(0.0, 1.0)),
              DeltaBlock("norm_bounded", 2, 3, gamma=1.0))
    cone = cone_for_blocks(blocks)
    assert cone.z == 4 and cone.s == 3
    rep = iqc_validate(cone, blocks, trials=1000, seed=4)
    assert rep.passed


# --- LFT builders -----------------------------------------------------------

def test_build_oag_lft_shapes():
    n = m = 2
    lft, cone = build_oag_lft(np.eye(n), np.eye(m), np.eye(m), eta=1.0, gamma=1.0)
    assert lft.A.shape == (2, 2)
    assert lft.B.shape == (2, 4)
    assert lft.C.shape == (4, 2)
    assert lft.D.shape == (4, 4)
    assert cone.dim == lft.z + lft.s


def test_build_oag_lft_zero_delta_gives_H():
    H = np.array([[2.0, 0.3], [0.3, 1.0]])
    lft, _ = build_oag_lft(H, np.eye(2), np.eye(2), eta=3.0, gamma=0.4)
    assert np.allclose(lft_jacobian(lft, np.zeros((lft.s, lft.z))), H)


def test_build_oag_lft_full_slopes_pushthrough():
    H = np.eye(2)
    Pi = np.array([[1.0, 1.0], [-1.0, 1.0]])
    eta = 10.0
    lft, _ = build_oag_lft(H, Pi, Pi, eta=eta, gamma=1.0)
    m = 2
    Delta = np.zeros((lft.s, lft.z))
    Delta[:m, :m] = np.eye(m)  # slopes all one, no model error
    assert np.allclose(lft_jacobian(lft, Delta), H + eta * Pi.T @ Pi)


def test_oag_lft_realization_matches_closed_form(rng):
    H = np.eye(3) * 2.0
    Pi = rng.standard_normal((4, 3))
    Pi_nom = Pi + 0.05 * rng.standard_normal((4, 3))
    eta, gamma = 7.0, 0.6
    lft, _ = build_oag_lft(H, Pi, Pi_nom, eta=eta, gamma=gamma)
    for _ in range(50):
        Dl = sample_delta(lft.blocks, rng)
        dq = np.diag(Dl[:4, :4].diagonal())
        dpi = Dl[4:, 4:]
        expect = H + eta * Pi.T @ dq @ (Pi_nom + dpi)
        assert np.allclose(lft_jacobian(lft, Dl), expect, atol=1e-10)


def test_oag_lft_is_always_wellposed(rng):
    # D Delta is strictly block-triangular, so (I - D Delta)(I + D Delta) = I
    lft, _ = build_oag_lft(np.eye(2), np.eye(2), np.eye(2), eta=1.0, gamma=2.0)
    for _ in range(100):
        Dl = sample_delta(lft.blocks, rng)
        M = np.eye(lft.z) - lft.D @ Dl
        assert np.isfinite(np.linalg.cond(M))
        assert np.allclose(M @ (np.eye(lft.z) + lft.D @ Dl), np.eye(lft.z))


def test_build_smooth_output_lft():
    H = np.eye(2)
    Pi = np.array([[1.0, 1.0], [-1.0, 1.0]])
    lft, cone = build_smooth_output_lft(H, Pi, 10.0 * np.eye(2), Pi, gamma=0.3)
    assert np.allclose(lft.A, H + 10.0 * Pi.T @ Pi)
    assert np.allclose(lft.D, 0.0)
    Dl = np.array([[0.1, 0.0], [0.0, -0.2]])
    assert np.allclose(lft_jacobian(lft, Dl), lft.A + lft.B @ Dl @ lft.C)


# --- polytope builders --------------------------------------------------------

def test_build_oag_polytope_scalar():
    poly = build_oag_polytope(np.eye(1), np.eye(1), eta=1.0,
                              plant_vertices=[np.eye(1)])
    got = sorted(float(V[0, 0]) for V in poly.vertices)
    assert got == [1.0, 2.0]


def test_build_oag_polytope_count():
    poly = build_oag_polytope(np.eye(2), np.eye(2), eta=1.0,
                              plant_vertices=[np.eye(2), 2 * np.eye(2)])
    assert len(poly.vertices) == 8  # 2^2 slope patterns x 2 vertices


def test_build_oag_polytope_cap_error():
    with pytest.raises(ValueError, match="8192"):
        build_oag_polytope(np.eye(13), np.ones((13, 13)), eta=1.0,
                           plant_vertices=[np.eye(13)], cap=4096)


def test_academic_vertex_set_contains_full_slope_pattern():
    # the published 4-vertex family equals the slope-saturated member of the
    # general enumeration: I + 10 Pi^T Q tilde with Q = I
    Pi = np.array([[1.0, 1.0], [-1.0, 1.0]])
    direct = [np.eye(2) + 10.0 * Pi.T @ V for V in AcademicPlant.jacobian_vertices()]
    enumerated = build_oag_polytope(np.eye(2), Pi, eta=10.0,
                                    plant_vertices=AcademicPlant.jacobian_vertices())
    for D in direct:
        assert any(np.allclose(D, E) for E in enumerated.vertices)
    assert np.allclose(direct[0], [[11.0, 10.0], [10.0, 11.0]])


# --- lft_jacobian -------------------------------------------------------------

def test_lft_jacobian_zero_delta_and_no_feedthrough(rng):
    A = rng.standard_normal((3, 3))
    B = rng.standard_normal((3, 2))
    C = rng.standard_normal((2, 3))
    blocks = (DeltaBlock("norm_bounded", 2, 2, gamma=1.0),)
    lft = LftSet(A, B, C, np.zeros((2, 2)), blocks)
    assert np.allclose(lft_jacobian(lft, np.zeros((2, 2))), A)
    Dl = sample_delta(blocks, rng)
    assert np.allclose(lft_jacobian(lft, Dl), A + B @ Dl @ C)


def test_lft_jacobian_pushthrough_identity(rng):
    # A + B Delta (I - D Delta)^-1 C == A + B (I - Delta D)^-1 Delta C
    A = rng.standard_normal((3, 3))
    B = rng.standard_normal((3, 2))
    C = rng.standard_normal((4, 3))
    D = 0.3 * rng.standard_normal((4, 2))
    blocks = (DeltaBlock("norm_bounded", 2, 4, gamma=0.5),)
    lft = LftSet(A, B, C, D, blocks)
    worst = 0.0
    for _ in range(1000):
        Dl = sample_delta(blocks, rng)
        J1 = lft.A + lft.B @ Dl @ np.linalg.solve(np.eye(4) - D @ Dl, C)
        J2 = lft_jacobian(lft, Dl)
        worst = max(worst, float(np.max(np.abs(J1 - J2))))
    assert worst <= 1e-10


def test_lft_jacobian_singular_error():
    blocks = (DeltaBlock("repeated_sector", 1, 1, sector=(1.0, 1.0)),)
    lft = LftSet(np.eye(1), np.eye(1), np.eye(1), np.eye(1), blocks)
    with pytest.raises(ValueError, match="singular"):
        lft_jacobian(lft, np.array([[1.0]]))


# --- sampling ------------------------------------------------------------------

def test_sample_delta_deterministic():
    blocks = (DeltaBlock("norm_bounded", 2, 3, gamma=1.0),
              DeltaBlock("repeated_sector", 2, 2, sector=(0.1, 0.9)))
    d1 = sample_delta(blocks, np.random.default_rng(7))
    d2 = sample_delta(blocks, np.random.default_rng(7))
    assert np.array_equal(d1, d2)


def test_sample_delta_respects_norm_bound(rng):
    blocks = (DeltaBlock("norm_bounded", 3, 2, gamma=0.8),)
    for _ in range(200):
        Dl = sample_delta(blocks, rng)
        assert np.linalg.norm(Dl, 2) <= 0.8 + 1e-12


def test_sample_delta_sector_spectrum(rng):
    blocks = (DeltaBlock("sector", 3, 3, sector=(0.2, 1.5)),)
    for _ in range(100):
        Dl = sample_delta(blocks, rng)
        eigs = np.linalg.eigvalsh(Dl)
        assert eigs[0] >= 0.2 - 1e-10 and eigs[-1] <= 1.5 + 1e-10


# --- iqc_validate ----------------------------------------------------------------

def test_iqc_validate_catches_corrupted_cone():
    gamma = 1.0
    good = cone_unstructured_norm_bounded(gamma, s=2, z=2)
    bad_gen = {"theta": -good.scalar_generators["theta"]}  # sign flip
    from fbopt.uncertainty import ConeParam, MultiplierCone
    bad = MultiplierCone(z=2, s=2, params=(ConeParam("theta", "scalar"),),
                         scalar_generators=bad_gen)
    blocks = (DeltaBlock("norm_bounded", 2, 2, gamma=gamma),)
    rep = iqc_validate(bad, blocks, trials=500, seed=5)
    assert not rep.passed
    assert rep.min_value < -1e-6


def test_polytope_json_roundtrip():
    poly = PolytopeSet((np.eye(2), np.array([[0.0, 1.0], [2.0, 3.0]])))
    clone = PolytopeSet.from_json_dict(poly.to_json_dict())
    assert all(np.array_equal(a, b)
               for a, b in zip(poly.vertices, clone.vertices))


def test_lft_json_roundtrip(rng):
    lft, _ = build_oag_lft(np.eye(2), np.array([[1.0, 1.0], [-1.0, 1.0]]),
                           np.array([[1.0, 1.0], [-1.0, 1.0]]),
                           eta=10.0, gamma=0.5)
    clone = LftSet.from_json_dict(lft.to_json_dict())
    assert np.array_equal(clone.A, lft.A) and np.array_equal(clone.D, lft.D)
    assert clone.blocks == lft.blocks
    Dl = sample_delta(clone.blocks, rng)
    assert np.allclose(lft_jacobian(clone, Dl), lft_jacobian(lft, Dl))


def test_iqc_validate_oag_cone():
    lft, cone = build_oag_lft(np.eye(2), np.array([[1.0, 1.0], [-1.0, 1.0]]),
                              np.array([[1.0, 1.0], [-1.0, 1.0]]),
                              eta=10.0, gamma=np.sqrt(2))
    rep = iqc_validate(cone, lft.blocks, trials=2000, seed=6)
    assert rep.passed, rep.min_value
