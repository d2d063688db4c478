"""Volumes and mixed volumes of ellipsoid bodies and small lattice polytopes.

Mixed volumes are normalized so MV(C, ..., C) = Vol(C) and computed by
polarization (inclusion-exclusion over Minkowski subset sums):

    MV(C_1, ..., C_n) = (1/n!) sum over nonempty S of (-1)^{n-|S|} Vol(sum_{i in S} C_i).

Ellipsoid bodies are described by their support function h(u) = sqrt(u'Mu)
with M symmetric PSD. A Minkowski sum of ellipsoids is not an ellipsoid,
so subset-sum volumes are computed from the summed support function:

* n = 1: segments, Vol = 2 sqrt(M), exact;
* n = 2: the polarization collapses to the mixed area
  A(K, L) = 1/2 integral of (h_K h_L - h_K' h_L') dtheta, evaluated in
  whitened coordinates: with S = M1 + M2 and T = S^{-1/2}, affine
  covariance gives A(M1, M2) = sqrt(det S) A(T M1 T, I - T M1 T). The
  whitened pair is complementary, so its integrand is uniformly well
  conditioned even when the original ellipses are nearly parallel
  segments (where a direct angular quadrature has an O(1/grid) error
  floor that does not decay with the true mixed area). Trapezoid rule
  on the uniform angular grid (default 4096) is then spectrally accurate
  for nondegenerate whitened pairs and O(grid^{-3/2}) in the worst case;
* n = 3: volume of the convex hull of the touch points grad h(u) =
  sum_i M_i u / sqrt(u'M_i u) over a Fibonacci sphere grid (default 20480
  directions); inscribed-hull error is O(1/grid).

Lattice polytope volumes and mixed volumes are exact rational arithmetic
(see hull.py); floats appear only at the public API boundary. That makes
the dilation homomorphism MV(d1 P, d2 Q) = d1 d2 MV(P, Q) an exact integer
identity, as the Bernstein-count tests require.

The expected absolute determinant of a matrix with independent Gaussian
rows r_i ~ N(0, S_i^2) equals n! MV(C_1, ..., C_n) where C_i is the
ellipsoid body with M = S_i^2 / (2 pi); for equal covariances this reduces
to n! Vol(C).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from . import hull
from .errors import UnsupportedError, ValidationError

DEFAULT_ANGULAR_GRID = 4096
DEFAULT_SPHERE_GRID = 20480


def ball_volume(n: int) -> float:
    """Vol of the unit n-ball, pi^{n/2} / Gamma(n/2 + 1), via log-gamma."""
    if n < 1:
        raise ValidationError("dimension must be >= 1")
    return math.exp(0.5 * n * math.log(math.pi) - math.lgamma(0.5 * n + 1.0))


def projective_volume(n: int) -> float:
    """Vol of real projective n-space, half the volume of the n-sphere."""
    if n < 1:
        raise ValidationError("dimension must be >= 1")
    # Vol(S^n) = (n+1) Vol(B^{n+1})
    return math.exp(
        math.log(0.5 * (n + 1))
        + 0.5 * (n + 1) * math.log(math.pi)
        - math.lgamma(0.5 * (n + 1) + 1.0)
    )


def tech_identity_residual(n: int) -> float:
    """n!/(2 pi)^n Vol(B^n) Vol(RP^n) - 1, accumulated in log space."""
    if not 1 <= n <= 30:
        raise ValidationError("supported for 1 <= n <= 30")
    log_total = (
        math.lgamma(n + 1.0)
        - n * math.log(2.0 * math.pi)
        + 0.5 * n * math.log(math.pi)
        - math.lgamma(0.5 * n + 1.0)
        + math.log(0.5 * (n + 1))
        + 0.5 * (n + 1) * math.log(math.pi)
        - math.lgamma(0.5 * (n + 1) + 1.0)
    )
    return math.expm1(log_total)


@dataclass(frozen=True)
class EllipsoidBody:
    """Convex body with support function h(u) = sqrt(u'Mu), M symmetric PSD."""

    n: int
    M: np.ndarray

    def __post_init__(self):
        M = np.asarray(self.M, dtype=np.float64)
        object.__setattr__(self, "M", M)
        if M.shape != (self.n, self.n):
            raise ValidationError(f"matrix shape {M.shape} does not match dimension {self.n}")
        if not np.all(np.isfinite(M)):
            raise ValidationError("body matrix has non-finite entries")
        scale = max(1.0, float(np.abs(M).max()))
        if np.abs(M - M.T).max() > 1e-10 * scale:
            raise ValidationError("body matrix is not symmetric")
        if np.linalg.eigvalsh(M).min() < -1e-10 * scale:
            raise ValidationError("body matrix is not positive semidefinite")


def ellipsoid_volume(body: EllipsoidBody) -> float:
    """sqrt(det M) times the unit-ball volume; degenerate bodies give 0."""
    eig = np.linalg.eigvalsh(0.5 * (body.M + body.M.T))
    scale = max(1.0, float(np.abs(body.M).max()))
    if eig.min() < -1e-10 * scale:
        raise ValidationError("invalid body: matrix has a negative eigenvalue")
    eig = np.clip(eig, 0.0, None)
    return float(np.sqrt(np.prod(eig)) * ball_volume(body.n))


def _fibonacci_sphere(count: int) -> np.ndarray:
    i = np.arange(count, dtype=np.float64)
    z = 1.0 - (2.0 * i + 1.0) / count
    phi = i * (math.pi * (3.0 - math.sqrt(5.0)))
    r = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def _sum_volume_1d(Ms: list[np.ndarray]) -> float:
    return 2.0 * sum(math.sqrt(max(float(M[0, 0]), 0.0)) for M in Ms)


def _mixed_area_pairs(M1: np.ndarray, M2: np.ndarray, grid: int) -> np.ndarray:
    """Mixed areas of (N, 2, 2) ellipse-matrix stacks, whitened per pair.

    With S = M1 + M2, affine covariance reduces each pair to (Mt, I - Mt)
    for Mt = S^{-1/2} M1 S^{-1/2}; there q1 + q2 = 1 on the unit circle and
    the integrand [q1 q2 + p^2] / sqrt(q1 q2) is nonnegative and bounded,
    so near-flat pairs cost no accuracy. Pairs whose sum body is flat
    (lambda_min <= 1e-12 lambda_max) have mixed area below pi * 1e-6 * scale
    and are reported as exactly 0.
    """
    S = M1 + M2
    s_val, s_vec = np.linalg.eigh(S)
    lam_min, lam_max = s_val[:, 0], s_val[:, -1]
    good = lam_min > 1e-12 * np.maximum(lam_max, 1e-300)
    out = np.zeros(len(S))
    if not np.any(good):
        return out
    ev = s_val[good]
    V = s_vec[good]
    inv_sqrt = (V / np.sqrt(ev)[:, None, :]) @ np.swapaxes(V, 1, 2)
    m_val, m_vec = np.linalg.eigh(M1[good])
    B = m_vec * np.sqrt(np.clip(m_val, 0.0, None))[:, None, :]
    C = np.swapaxes(B, 1, 2) @ inv_sqrt  # q1 = |C u|^2, a sum of squares

    th = np.linspace(0.0, 2.0 * math.pi, grid, endpoint=False)
    u = np.stack([np.cos(th), np.sin(th)])
    du = np.stack([-np.sin(th), np.cos(th)])
    Cu = np.einsum("pij,jg->pig", C, u)
    Cdu = np.einsum("pij,jg->pig", C, du)
    q1 = np.clip(np.einsum("pig,pig->pg", Cu, Cu), 0.0, 1.0)
    p = np.einsum("pig,pig->pg", Cdu, Cu)
    hh = np.sqrt(q1 * (1.0 - q1))
    integrand = np.where(hh > 0, (q1 * (1.0 - q1) + p * p) / np.where(hh > 0, hh, 1.0), 0.0)
    tilde = (math.pi / grid) * integrand.sum(axis=1)
    out[good] = np.sqrt(ev[:, 0] * ev[:, 1]) * tilde
    return out


def _sum_volume_3d(Ms: list[np.ndarray], grid: int) -> float:
    total = sum(Ms)
    scale = max(1.0, float(np.abs(total).max()))
    if np.linalg.eigvalsh(total).min() < 1e-12 * scale:
        return 0.0  # common kernel direction: the sum body is flat
    u = _fibonacci_sphere(grid)
    pts = np.zeros_like(u)
    for M in Ms:
        Mu = u @ M
        q = np.einsum("gi,gi->g", u, Mu)
        r = np.sqrt(np.clip(q, 0.0, None))
        good = r > 0
        pts += np.where(good[:, None], Mu / np.where(good, r, 1.0)[:, None], 0.0)
    try:
        return float(ConvexHull(pts).volume)
    except QhullError:
        return 0.0


def _subset_volumes(Ms: list[np.ndarray], n: int, grid: int | None):
    """(sign, volume) of every nonempty Minkowski subset sum, for polarization."""
    out = []
    idx = range(len(Ms))
    for k in range(1, len(Ms) + 1):
        for S in itertools.combinations(idx, k):
            chosen = [Ms[i] for i in S]
            if n == 1:
                vol = _sum_volume_1d(chosen)
            else:
                vol = _sum_volume_3d(chosen, grid or DEFAULT_SPHERE_GRID)
            out.append(((-1) ** (len(Ms) - k), vol))
    return out


def mixed_volume_ellipsoids(bodies: list[EllipsoidBody], grid: int | None = None) -> float:
    """Mixed volume of an n-tuple of ellipsoid bodies, n <= 3."""
    n = len(bodies)
    if n < 1 or n > 3:
        raise UnsupportedError(f"mixed volumes implemented for 1 <= n <= 3, got {n}")
    for b in bodies:
        if b.n != n:
            raise ValidationError(f"body dimension {b.n} does not match tuple length {n}")
    Ms = [b.M for b in bodies]
    if n == 2:
        return float(mixed_area_batch(Ms[0][None], Ms[1][None], grid or DEFAULT_ANGULAR_GRID)[0])
    acc = 0.0
    for sign, vol in _subset_volumes(Ms, n, grid):
        acc += sign * vol
    return acc / math.factorial(n)


def mixed_area_batch(M1: np.ndarray, M2: np.ndarray, grid: int) -> np.ndarray:
    """MV of two ellipse families given as (N, 2, 2) stacks, vectorized over N."""
    return _mixed_area_pairs(np.asarray(M1, dtype=np.float64), np.asarray(M2, dtype=np.float64), grid)


@dataclass(frozen=True)
class LatticePolytope:
    """Integer polytope in dimension <= 3, stored by its extreme points."""

    n: int
    vertices: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.n > 3:
            raise UnsupportedError(f"lattice polytopes supported up to dimension 3, got {self.n}")
        if not self.vertices:
            raise ValidationError("a polytope needs at least one vertex")
        for v in self.vertices:
            if len(v) != self.n:
                raise ValidationError(f"vertex {v} has length {len(v)}, expected {self.n}")
        canon = tuple(hull.hull_vertices(list(self.vertices)))
        if canon != self.vertices:
            raise ValidationError("vertex list is not the canonical extreme-point set of its hull")

    @classmethod
    def from_points(cls, points) -> "LatticePolytope":
        pts = [tuple(int(c) for c in p) for p in points]
        if not pts:
            raise ValidationError("a polytope needs at least one point")
        return cls(len(pts[0]), tuple(hull.hull_vertices(pts)))

    def dilate(self, d: int) -> "LatticePolytope":
        if d < 1:
            raise ValidationError("dilation factor must be >= 1")
        return LatticePolytope.from_points([tuple(d * c for c in v) for v in self.vertices])


def mixed_volume_polytopes_exact(polys: list[LatticePolytope]) -> Fraction:
    n = len(polys)
    if n < 1 or n > 3:
        raise UnsupportedError(f"mixed volumes implemented for 1 <= n <= 3, got {n}")
    for p in polys:
        if p.n != n:
            raise ValidationError(f"polytope dimension {p.n} does not match tuple length {n}")
    acc = Fraction(0)
    for k in range(1, n + 1):
        for S in itertools.combinations(range(n), k):
            pts = list(polys[S[0]].vertices)
            for i in S[1:]:
                pts = hull.minkowski_sum(pts, list(polys[i].vertices))
                pts = hull.hull_vertices(pts)  # keep the sum small before the next round
            acc += (-1) ** (n - k) * hull.polytope_volume(pts)
    return acc / math.factorial(n)


def mixed_volume_polytopes(polys: list[LatticePolytope]) -> float:
    """Exact polarization over exact lattice volumes, returned as a float."""
    return float(mixed_volume_polytopes_exact(polys))


def _as_covariance(cov, n: int) -> np.ndarray:
    arr = np.asarray(cov, dtype=np.float64)
    if arr.shape == () and n == 1:
        arr = arr.reshape(1, 1)
    if arr.shape != (n, n):
        raise ValidationError(f"covariance shape {arr.shape}, expected ({n}, {n})")
    return arr


def expected_abs_det_gaussian(covariances, grid: int | None = None) -> float:
    """E|det| for independent Gaussian rows r_i ~ N(0, cov_i): n! MV of the zonoids."""
    n = len(covariances)
    if n < 1 or n > 3:
        raise UnsupportedError(f"closed form implemented for 1 <= n <= 3, got {n}")
    covs = [_as_covariance(c, n) for c in covariances]
    bodies = [EllipsoidBody(n, c / (2.0 * math.pi)) for c in covs]
    if all(np.array_equal(covs[0], c) for c in covs[1:]):
        return math.factorial(n) * ellipsoid_volume(bodies[0])
    return math.factorial(n) * mixed_volume_ellipsoids(bodies, grid=grid)
