"""Convex-body volumes: balls, ellipsoid mixed volumes, lattice polytopes,
Gaussian determinant expectations.

Ellipsoid mixed areas are cross-checked against an independent support
function quadrature (A(K,L) = 1/2 int h_K h_L - h_K' h_L' dtheta) and
against Monte Carlo determinant averages; polytope mixed volumes are exact
rational arithmetic throughout.
"""

import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from kernel_roots.convexity import (
    EllipsoidBody,
    LatticePolytope,
    ball_volume,
    ellipsoid_volume,
    expected_abs_det_gaussian,
    mixed_area_batch,
    mixed_volume_ellipsoids,
    mixed_volume_polytopes,
    mixed_volume_polytopes_exact,
    projective_volume,
    tech_identity_residual,
)
from kernel_roots.errors import UnsupportedError, ValidationError
from kernel_roots.montecarlo import estimate_abs_det

# independent high-resolution oracle for the anisotropic test pair
FROZEN_MIXED_AREA = 12.450039795015147
PAIR_A = np.diag([1.0, 4.0])
PAIR_B = np.diag([9.0, 1.0])


def mixed_area_oracle(M1, M2, nodes=1_000_000):
    """Smooth-body mixed area by direct support-function quadrature."""
    th = np.linspace(0.0, 2.0 * math.pi, nodes, endpoint=False)
    u = np.stack([np.cos(th), np.sin(th)])
    du = np.stack([-np.sin(th), np.cos(th)])

    def h_and_hp(M):
        Mu = M @ u
        h = np.sqrt(np.einsum("ig,ig->g", u, Mu))
        hp = np.einsum("ig,ig->g", du, Mu) / h
        return h, hp

    h1, hp1 = h_and_hp(M1)
    h2, hp2 = h_and_hp(M2)
    return 0.5 * (2.0 * math.pi) * np.mean(h1 * h2 - hp1 * hp2)


def random_covariance(rng, n):
    A = rng.standard_normal((n, n))
    return A @ A.T + 0.05 * np.eye(n)


# -- reference volumes ------------------------------------------------------------


def test_ball_volumes():
    assert ball_volume(1) == pytest.approx(2.0, rel=1e-14)
    assert ball_volume(2) == pytest.approx(math.pi, rel=1e-14)
    assert ball_volume(3) == pytest.approx(4.0 * math.pi / 3.0, rel=1e-14)


def test_projective_volumes():
    assert projective_volume(1) == pytest.approx(math.pi, rel=1e-14)
    assert projective_volume(2) == pytest.approx(2.0 * math.pi, rel=1e-14)
    assert projective_volume(3) == pytest.approx(math.pi**2, rel=1e-14)


def test_volume_identity_residual_small():
    assert abs(tech_identity_residual(1)) < 1e-14
    assert abs(tech_identity_residual(2)) < 1e-14
    for n in range(1, 13):
        assert abs(tech_identity_residual(n)) < 1e-12
    assert abs(tech_identity_residual(30)) < 1e-12


def test_volume_identity_range_checked():
    for n in (0, 31, -1):
        with pytest.raises(ValidationError):
            tech_identity_residual(n)


# -- ellipsoid bodies ----------------------------------------------------------------


def test_ellipsoid_volumes():
    assert ellipsoid_volume(EllipsoidBody(2, np.eye(2))) == pytest.approx(math.pi, rel=1e-14)
    assert ellipsoid_volume(EllipsoidBody(2, np.diag([4.0, 9.0]))) == pytest.approx(6.0 * math.pi, rel=1e-14)
    assert ellipsoid_volume(EllipsoidBody(2, np.eye(2) / (2.0 * math.pi))) == pytest.approx(0.5, rel=1e-14)
    # degenerate body is flat, not invalid
    assert ellipsoid_volume(EllipsoidBody(2, np.diag([1.0, 0.0]))) == 0.0


def test_ellipsoid_body_validation():
    with pytest.raises(ValidationError):
        EllipsoidBody(2, np.array([[1.0, 0.5], [0.0, 1.0]]))  # not symmetric
    with pytest.raises(ValidationError):
        EllipsoidBody(2, -np.eye(2))  # not PSD
    with pytest.raises(ValidationError):
        EllipsoidBody(2, np.eye(3))  # shape mismatch


def test_mixed_volume_equal_bodies_is_volume():
    rng = np.random.default_rng(1)
    for n in (1, 2, 3):
        M = random_covariance(rng, n)
        body = EllipsoidBody(n, M)
        mv = mixed_volume_ellipsoids([body] * n)
        assert mv == pytest.approx(ellipsoid_volume(body), rel=1e-3 if n == 3 else 1e-6)


def test_anisotropic_pair_matches_quadrature_oracle():
    oracle = mixed_area_oracle(PAIR_A, PAIR_B)
    assert oracle == pytest.approx(FROZEN_MIXED_AREA, rel=1e-12)
    got = mixed_volume_ellipsoids([EllipsoidBody(2, PAIR_A), EllipsoidBody(2, PAIR_B)])
    assert got == pytest.approx(FROZEN_MIXED_AREA, rel=1e-9)


def test_anisotropic_pair_matches_monte_carlo():
    # rows (g1, 2 g2) and (3 g3, g4): mixed area = pi E|g1 g4 - 6 g2 g3|
    rng = np.random.default_rng(2026)
    g = rng.standard_normal((2_000_000, 4))
    dets = np.abs(g[:, 0] * g[:, 3] - 6.0 * g[:, 1] * g[:, 2])
    mc = math.pi * dets.mean()
    band = 3.0 * math.pi * dets.std(ddof=1) / math.sqrt(len(dets))
    assert abs(mc - FROZEN_MIXED_AREA) < band


def test_mixed_area_batch_matches_single_path():
    Ms1 = np.stack([PAIR_A, np.eye(2), np.diag([2.0, 0.5])])
    Ms2 = np.stack([PAIR_B, np.eye(2), np.diag([1.0, 3.0])])
    batch = mixed_area_batch(Ms1, Ms2, 4096)
    for k in range(3):
        single = mixed_volume_ellipsoids([EllipsoidBody(2, Ms1[k]), EllipsoidBody(2, Ms2[k])])
        assert batch[k] == pytest.approx(single, rel=1e-12)


def test_mixed_volume_multilinear_in_scaling():
    rng = np.random.default_rng(3)
    M1, M2 = random_covariance(rng, 2), random_covariance(rng, 2)
    base = mixed_volume_ellipsoids([EllipsoidBody(2, M1), EllipsoidBody(2, M2)])
    for lam in (2.0, 0.5):
        # body scales by lam when its matrix scales by lam^2
        scaled = mixed_volume_ellipsoids([EllipsoidBody(2, lam**2 * M1), EllipsoidBody(2, M2)])
        assert scaled == pytest.approx(lam * base, rel=1e-6)


def test_mixed_volume_3d_multilinear():
    rng = np.random.default_rng(4)
    Ms = [random_covariance(rng, 3) for _ in range(3)]
    bodies = [EllipsoidBody(3, M) for M in Ms]
    base = mixed_volume_ellipsoids(bodies)
    scaled = mixed_volume_ellipsoids([EllipsoidBody(3, 4.0 * Ms[0])] + bodies[1:])
    assert scaled == pytest.approx(2.0 * base, rel=1e-3)


def test_mixed_volume_permutation_symmetric():
    rng = np.random.default_rng(5)
    bodies = [EllipsoidBody(2, random_covariance(rng, 2)) for _ in range(2)]
    a = mixed_volume_ellipsoids(bodies)
    b = mixed_volume_ellipsoids(bodies[::-1])
    assert a == pytest.approx(b, rel=1e-9)


def test_mixed_volume_monotone_under_containment():
    # M' = M + B B^T contains M (support function dominates pointwise)
    rng = np.random.default_rng(6)
    for n in (2, 3):
        for _ in range(10):
            rest = [EllipsoidBody(n, random_covariance(rng, n)) for _ in range(n - 1)]
            M = random_covariance(rng, n)
            B = rng.standard_normal((n, n))
            small = mixed_volume_ellipsoids([EllipsoidBody(n, M)] + rest)
            big = mixed_volume_ellipsoids([EllipsoidBody(n, M + B @ B.T)] + rest)
            assert small <= big + 1e-9


def test_mixed_volume_degenerate_bodies():
    seg_x = EllipsoidBody(2, np.diag([1.0, 0.0]))
    seg_y = EllipsoidBody(2, np.diag([0.0, 1.0]))
    disc = EllipsoidBody(2, np.eye(2))
    # segment [-e1, e1] + unit disc: stadium of area 4 + pi, so MV = 2
    assert mixed_volume_ellipsoids([seg_x, disc]) == pytest.approx(2.0, abs=1e-5)
    # two perpendicular segments span the square [-1, 1]^2
    assert mixed_volume_ellipsoids([seg_x, seg_y]) == pytest.approx(2.0, abs=1e-5)
    # parallel segments are flat together
    assert mixed_volume_ellipsoids([seg_x, seg_x]) == pytest.approx(0.0, abs=1e-12)


def test_mixed_volume_tuple_validation():
    with pytest.raises(UnsupportedError):
        mixed_volume_ellipsoids([EllipsoidBody(4, np.eye(4))] * 4)
    with pytest.raises(ValidationError):
        mixed_volume_ellipsoids([EllipsoidBody(2, np.eye(2)), EllipsoidBody(3, np.eye(3))])


# -- lattice polytopes -----------------------------------------------------------------


def test_polytope_canonical_form_enforced():
    with pytest.raises(ValidationError):
        LatticePolytope(2, ((0, 0), (2, 0), (1, 0)))  # midpoint is not extreme
    p = LatticePolytope.from_points([(0, 0), (2, 0), (1, 0)])
    assert p.vertices == ((0, 0), (2, 0))


def test_polytope_dilate():
    tri = LatticePolytope.from_points([(0, 0), (1, 0), (0, 1)])
    assert sorted(tri.dilate(3).vertices) == [(0, 0), (0, 3), (3, 0)]
    with pytest.raises(ValidationError):
        tri.dilate(0)


def test_mixed_volume_simplex_pair():
    tri = LatticePolytope.from_points([(0, 0), (1, 0), (0, 1)])
    assert mixed_volume_polytopes_exact([tri, tri]) == Fraction(1, 2)
    assert mixed_volume_polytopes([tri, tri]) == 0.5


def test_mixed_volume_segments():
    p = LatticePolytope.from_points([(0, 0), (2, 0)])
    q = LatticePolytope.from_points([(0, 0), (0, 3)])
    assert mixed_volume_polytopes_exact([p, q]) == 3
    # parallel segments have no mixed volume
    assert mixed_volume_polytopes_exact([p, p]) == 0


def test_mixed_volume_polytopes_dilation_multiplicative():
    rng = np.random.default_rng(7)
    for _ in range(15):
        p = LatticePolytope.from_points(rng.integers(0, 5, size=(5, 2)))
        q = LatticePolytope.from_points(rng.integers(0, 5, size=(5, 2)))
        base = mixed_volume_polytopes_exact([p, q])
        for d1, d2 in itertools.product((1, 2, 3), repeat=2):
            assert mixed_volume_polytopes_exact([p.dilate(d1), q.dilate(d2)]) == d1 * d2 * base


def test_mixed_volume_polytopes_multilinear():
    rng = np.random.default_rng(8)
    from kernel_roots.hull import hull_vertices, minkowski_sum

    for _ in range(10):
        p1 = LatticePolytope.from_points(rng.integers(0, 4, size=(4, 2)))
        p2 = LatticePolytope.from_points(rng.integers(0, 4, size=(4, 2)))
        q = LatticePolytope.from_points(rng.integers(0, 4, size=(4, 2)))
        s = LatticePolytope.from_points(
            hull_vertices(minkowski_sum(list(p1.vertices), list(p2.vertices)))
        )
        lhs = mixed_volume_polytopes_exact([s, q])
        rhs = mixed_volume_polytopes_exact([p1, q]) + mixed_volume_polytopes_exact([p2, q])
        assert lhs == rhs


def test_mixed_volume_polytopes_symmetric_exact():
    rng = np.random.default_rng(9)
    for _ in range(10):
        p = LatticePolytope.from_points(rng.integers(0, 5, size=(4, 2)))
        q = LatticePolytope.from_points(rng.integers(0, 5, size=(4, 2)))
        assert mixed_volume_polytopes_exact([p, q]) == mixed_volume_polytopes_exact([q, p])


def test_mixed_volume_polytopes_3d_equal_is_volume():
    cube = LatticePolytope.from_points(list(itertools.product((0, 2), repeat=3)))
    assert mixed_volume_polytopes_exact([cube] * 3) == 8


# -- Gaussian determinant expectations ---------------------------------------------------


def test_abs_det_one_dimensional():
    assert expected_abs_det_gaussian([np.array([[1.0]])]) == pytest.approx(math.sqrt(2.0 / math.pi), rel=1e-14)
    assert expected_abs_det_gaussian([np.array([[4.0]])]) == pytest.approx(2.0 * math.sqrt(2.0 / math.pi), rel=1e-14)


def test_abs_det_standard_pair_is_one():
    assert expected_abs_det_gaussian([np.eye(2), np.eye(2)]) == pytest.approx(1.0, rel=1e-12)


def test_abs_det_anisotropic_pair_vs_monte_carlo():
    covs = [np.diag([2.0, 1.0]), np.eye(2)]
    closed = expected_abs_det_gaussian(covs)
    mc = estimate_abs_det(covs, 1_000_000, seed=12)
    assert abs(closed - mc.mean) < 3.0 * mc.stderr


def test_abs_det_permutation_symmetric():
    rng = np.random.default_rng(10)
    covs = [random_covariance(rng, 2) for _ in range(2)]
    assert expected_abs_det_gaussian(covs) == pytest.approx(expected_abs_det_gaussian(covs[::-1]), rel=1e-9)


def test_abs_det_random_tuples_vs_monte_carlo():
    rng = np.random.default_rng(11)
    cases = []
    for n in (1, 2, 3):
        for _ in range(7 if n < 3 else 6):
            cases.append([random_covariance(rng, n) for _ in range(n)])
    assert len(cases) == 20
    for k, covs in enumerate(cases):
        closed = expected_abs_det_gaussian(covs)
        mc = estimate_abs_det(covs, 200_000, seed=100 + k)
        assert abs(closed - mc.mean) < 3.0 * mc.stderr, (k, closed, mc)


def test_abs_det_dimension_capped():
    with pytest.raises(UnsupportedError):
        expected_abs_det_gaussian([np.eye(4)] * 4)
