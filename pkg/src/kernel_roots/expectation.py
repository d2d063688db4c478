"""Expected real-root densities and counts for Gaussian exponential-sum systems.

The central object is the pointwise density of expected roots in log
coordinates x:

    density(x) = n! / (2 pi)^{n/2} * MV(C_1(x), ..., C_n(x)),

where C_i(x) is the ellipsoid body with matrix G_i(x) / (2 pi) and G_i is
the pullback metric of the i-th space. When all spaces coincide the mixed
volume collapses to a determinant and

    density(x) = n! Vol(B^n) / (2 pi)^n * sqrt(det G(x)),

whose integral over a domain, divided by Vol(RP^n), is the expected count
(equivalently: the Riemannian volume swept in projective space divided by
the volume of projective space). Expected counts over box unions are
computed by tensor Gauss-Legendre quadrature with per-axis dyadic
subdivision; the error estimate is the difference against the half-order
rule on the same panels. The integrand is analytic, so this is generous.

Unbounded domains are handled by truncation on the caller's side: the
integrand decays exponentially (the momentum map saturates at the support
hull's vertices), and for the shipped examples a [-30, 30]^n box puts the
tail below 1e-6 of the total. The truncation radius is an input, never
hard-coded.

Orthant decompositions: a SignedDomain maps sign vectors s to regions of
the positive orthant in X-coordinates. Flipping coefficient signs is
measure-preserving for centered Gaussians, so the expected count over the
signed union is the plain sum of the per-orthant counts with each region
pulled back to x-space by the componentwise log.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import convexity, geometry
from .convexity import LatticePolytope
from .errors import UnsupportedError, ValidationError
from .spaces import ExpSumSpace, power, support_hull


@dataclass(frozen=True)
class DomainBox:
    """Axis-aligned box lo < hi (componentwise) in x-space."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(c) for c in self.lo)
        hi = tuple(float(c) for c in self.hi)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if len(lo) != len(hi):
            raise ValidationError("lo and hi have different lengths")
        if not all(math.isfinite(c) for c in lo + hi):
            raise ValidationError("box bounds must be finite")
        if not all(a < b for a, b in zip(lo, hi)):
            raise ValidationError(f"box needs lo < hi componentwise, got lo={lo}, hi={hi}")

    @property
    def n(self) -> int:
        return len(self.lo)


def _interiors_overlap(a: DomainBox, b: DomainBox) -> bool:
    return all(al < bh and bl < ah for al, ah, bl, bh in zip(a.lo, a.hi, b.lo, b.hi))


@dataclass(frozen=True)
class DomainUnion:
    """Finite union of boxes with pairwise disjoint interiors."""

    boxes: tuple[DomainBox, ...]

    def __post_init__(self):
        if not self.boxes:
            raise ValidationError("a domain union needs at least one box")
        n = self.boxes[0].n
        for b in self.boxes:
            if b.n != n:
                raise ValidationError("all boxes in a union must share a dimension")
        for i, a in enumerate(self.boxes):
            for b in self.boxes[i + 1 :]:
                if _interiors_overlap(a, b):
                    raise ValidationError("union boxes must have disjoint interiors")

    @property
    def n(self) -> int:
        return self.boxes[0].n


def as_union(domain, n: int | None = None) -> DomainUnion:
    if isinstance(domain, DomainBox):
        domain = DomainUnion((domain,))
    if not isinstance(domain, DomainUnion):
        raise ValidationError(f"expected a DomainBox or DomainUnion, got {type(domain).__name__}")
    if n is not None and domain.n != n:
        raise ValidationError(f"domain dimension {domain.n} does not match space dimension {n}")
    return domain


@dataclass(frozen=True)
class SignedDomain:
    """Map from sign vectors s in {-1, +1}^n to positive-orthant regions (X-coords).

    Region W_s lives strictly inside X > 0; the represented set is the
    disjoint union of diag(s) W_s over the stored signs.
    """

    regions: tuple[tuple[tuple[int, ...], DomainUnion], ...]

    def __post_init__(self):
        if not self.regions:
            raise ValidationError("a signed domain needs at least one sign condition")
        n = len(self.regions[0][0])
        seen = set()
        for s, union in self.regions:
            if len(s) != n or any(c not in (-1, 1) for c in s):
                raise ValidationError(f"bad sign vector {s}")
            if s in seen:
                raise ValidationError(f"duplicate sign vector {s}")
            seen.add(s)
            if union.n != n:
                raise ValidationError("region dimension does not match sign vector length")
            for box in union.boxes:
                if any(lo <= 0 for lo in box.lo):
                    raise ValidationError(
                        "signed regions must stay strictly inside the positive orthant "
                        f"(box with lo={box.lo} touches a coordinate hyperplane)"
                    )
        object.__setattr__(self, "regions", tuple(sorted(self.regions)))

    @property
    def n(self) -> int:
        return len(self.regions[0][0])

    @classmethod
    def from_map(cls, mapping) -> "SignedDomain":
        return cls(tuple((tuple(s), as_union(u)) for s, u in dict(mapping).items()))

    @classmethod
    def symmetric_from_log_domain(cls, domain, signs=None) -> "SignedDomain":
        """Place exp(domain) in every requested orthant (default: all 2^n)."""
        union = as_union(domain)
        n = union.n
        xboxes = DomainUnion(
            tuple(
                DomainBox(tuple(math.exp(c) for c in b.lo), tuple(math.exp(c) for c in b.hi))
                for b in union.boxes
            )
        )
        if signs is None:
            signs = [
                tuple(1 if (k >> i) & 1 == 0 else -1 for i in range(n)) for k in range(2**n)
            ]
        return cls(tuple((tuple(s), xboxes) for s in signs))


@dataclass(frozen=True)
class QuadratureConfig:
    nodes_per_axis: int = 64
    subdivisions: int = 8
    mv_grid: int | None = None  # forwarded to the ellipsoid mixed-volume quadrature

    def __post_init__(self):
        if self.nodes_per_axis < 1 or self.subdivisions < 1:
            raise ValidationError("quadrature config values must be positive")
        if self.mv_grid is not None and self.mv_grid < 1:
            raise ValidationError("mv_grid must be positive")


DEFAULT_CONFIG = QuadratureConfig()

_CHUNK_CLOSED = 1 << 16
_CHUNK_MIXED = 1 << 10


class ExpectedRoots(NamedTuple):
    value: float
    error_estimate: float


class ScalingCheck(NamedTuple):
    lhs: float
    rhs: float
    ratio: float


class SubadditivityCheck(NamedTuple):
    lhs: float
    rhs_sum: float
    slack: float


def _check_spaces(spaces) -> int:
    n = len(spaces)
    if n < 1:
        raise ValidationError("need at least one space")
    if n > 3:
        raise UnsupportedError(f"densities implemented for 1 <= n <= 3, got {n}")
    for s in spaces:
        if s.dim != n:
            raise ValidationError(f"space dimension {s.dim} does not match system size {n}")
    return n


def _det_batch(G: np.ndarray) -> np.ndarray:
    return np.clip(np.linalg.det(G), 0.0, None)


def density_batch(spaces, X: np.ndarray, cfg: QuadratureConfig = DEFAULT_CONFIG, method: str = "auto") -> np.ndarray:
    """Root density at a batch of points, (N,) for X of shape (N, n)."""
    n = _check_spaces(spaces)
    equal = all(s == spaces[0] for s in spaces[1:])
    if method not in ("auto", "closed", "mixed"):
        raise ValidationError(f"unknown density method {method!r}")
    if method == "closed" and not equal:
        raise ValidationError("closed-form density requires identical spaces")
    use_closed = method == "closed" or (method == "auto" and equal)
    if use_closed:
        G = geometry.metric_batch(spaces[0], X)
        factor = math.factorial(n) * convexity.ball_volume(n) / (2.0 * math.pi) ** n
        return factor * np.sqrt(_det_batch(G))
    factor = math.factorial(n) / (2.0 * math.pi) ** (n / 2.0)
    two_pi = 2.0 * math.pi
    if n == 1:
        G = geometry.metric_batch(spaces[0], X)[:, 0, 0]
        mv = 2.0 * np.sqrt(np.clip(G / two_pi, 0.0, None))
        return factor * mv
    if n == 2:
        grid = cfg.mv_grid or convexity.DEFAULT_ANGULAR_GRID
        M1 = geometry.metric_batch(spaces[0], X) / two_pi
        M2 = geometry.metric_batch(spaces[1], X) / two_pi
        mv = convexity.mixed_area_batch(M1, M2, grid)
        return factor * np.clip(mv, 0.0, None)
    out = np.empty(X.shape[0])
    Gs = [geometry.metric_batch(s, X) / two_pi for s in spaces]
    for p in range(X.shape[0]):
        bodies = [convexity.EllipsoidBody(n, Gi[p]) for Gi in Gs]
        out[p] = convexity.mixed_volume_ellipsoids(bodies, grid=cfg.mv_grid)
    return factor * np.clip(out, 0.0, None)


def density(spaces, x, cfg: QuadratureConfig = DEFAULT_CONFIG, method: str = "auto") -> float:
    n = _check_spaces(spaces)
    X = geometry.as_point(x, n)[None, :]
    return float(density_batch(spaces, X, cfg, method)[0])


def _axis_nodes(lo: float, hi: float, order: int, subdivisions: int):
    base, bw = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(lo, hi, subdivisions + 1)
    width = (hi - lo) / subdivisions
    nodes = (edges[:-1, None] + 0.5 * width * (base[None, :] + 1.0)).ravel()
    weights = np.tile(0.5 * width * bw, subdivisions)
    return nodes, weights


def _integrate_box(f_batch, box: DomainBox, order: int, subdivisions: int, chunk: int) -> float:
    axes = [_axis_nodes(lo, hi, order, subdivisions) for lo, hi in zip(box.lo, box.hi)]
    grids = np.meshgrid(*[a[0] for a in axes], indexing="ij")
    X = np.stack([g.ravel() for g in grids], axis=1)
    wgrids = np.meshgrid(*[a[1] for a in axes], indexing="ij")
    w = np.ones(X.shape[0])
    for wg in wgrids:
        w *= wg.ravel()
    total = 0.0
    for start in range(0, X.shape[0], chunk):
        sl = slice(start, start + chunk)
        total += float(np.dot(w[sl], f_batch(X[sl])))
    return total


def _integrate(f_batch, domain: DomainUnion, cfg: QuadratureConfig, chunk: int) -> ExpectedRoots:
    full = sum(_integrate_box(f_batch, b, cfg.nodes_per_axis, cfg.subdivisions, chunk) for b in domain.boxes)
    half_order = max(1, cfg.nodes_per_axis // 2)
    half = sum(_integrate_box(f_batch, b, half_order, cfg.subdivisions, chunk) for b in domain.boxes)
    return ExpectedRoots(full, abs(full - half))


def _density_chunk(spaces, cfg) -> int:
    equal = all(s == spaces[0] for s in spaces[1:])
    n = len(spaces)
    if equal or n == 1:
        return _CHUNK_CLOSED
    if n == 2:
        grid = cfg.mv_grid or convexity.DEFAULT_ANGULAR_GRID
        return max(1, _CHUNK_MIXED * 4096 // max(grid, 1))
    return 64


def expected_roots(spaces, domain, cfg: QuadratureConfig = DEFAULT_CONFIG) -> ExpectedRoots:
    """Expected number of real roots in the box union (x-space), with error estimate."""
    n = _check_spaces(spaces)
    union = as_union(domain, n)
    chunk = _density_chunk(spaces, cfg)
    return _integrate(lambda X: density_batch(spaces, X, cfg), union, cfg, chunk)


def veronese_volume(space: ExpSumSpace, domain, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """Integral of sqrt(det G) over the domain (the swept projective volume)."""
    n = space.dim
    if n > 3:
        raise UnsupportedError(f"implemented for 1 <= n <= 3, got {n}")
    union = as_union(domain, n)

    def jac(X):
        return np.sqrt(_det_batch(geometry.metric_batch(space, X)))

    return _integrate(jac, union, cfg, _CHUNK_CLOSED).value


def scaling_check(spaces, degrees, domain, cfg: QuadratureConfig = DEFAULT_CONFIG) -> ScalingCheck:
    """Both sides of E(F1^d1, ..., Fn^dn) = sqrt(prod d) E(F1, ..., Fn)."""
    n = _check_spaces(spaces)
    if len(degrees) != n:
        raise ValidationError(f"{len(degrees)} degrees for {n} spaces")
    powered = [power(s, d) for s, d in zip(spaces, degrees)]
    lhs = expected_roots(powered, domain, cfg).value
    base = expected_roots(spaces, domain, cfg).value
    rhs = math.sqrt(math.prod(degrees)) * base
    ratio = 1.0 if lhs == base else lhs / base
    return ScalingCheck(lhs, rhs, ratio)


def subadditivity_check(front, G: ExpSumSpace, H: ExpSumSpace, domain, cfg: QuadratureConfig = DEFAULT_CONFIG) -> SubadditivityCheck:
    """Slack of E(..., GH) <= E(..., G) + E(..., H) over the domain."""
    from .spaces import aronszajn_product

    front = list(front)
    lhs = expected_roots(front + [aronszajn_product(G, H)], domain, cfg).value
    rhs = (
        expected_roots(front + [G], domain, cfg).value
        + expected_roots(front + [H], domain, cfg).value
    )
    return SubadditivityCheck(lhs, rhs, rhs - lhs)


def generic_count(supports: list[LatticePolytope]) -> float:
    """Generic number of torus roots: n! times the mixed volume, exact."""
    n = len(supports)
    exact = math.factorial(n) * convexity.mixed_volume_polytopes_exact(supports)
    return float(exact)


def _support_polytope(space: ExpSumSpace) -> LatticePolytope:
    return LatticePolytope(space.dim, tuple(support_hull(space).hull_vertices))


def square_root_ratio(spaces, degrees, domain, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """E(F1^d1, ...) / sqrt(generic count of the powered supports)."""
    n = _check_spaces(spaces)
    if len(degrees) != n:
        raise ValidationError(f"{len(degrees)} degrees for {n} spaces")
    powered = [power(s, d) for s, d in zip(spaces, degrees)]
    count = generic_count([_support_polytope(s) for s in powered])
    if count == 0:
        raise ValidationError("undefined ratio: the generic count of the supports is zero")
    if isinstance(domain, SignedDomain):
        value = expected_roots_signed(powered, domain, cfg)
    else:
        value = expected_roots(powered, domain, cfg).value
    return value / math.sqrt(count)


def expected_roots_signed_report(poly_spaces, W: SignedDomain, cfg: QuadratureConfig = DEFAULT_CONFIG) -> ExpectedRoots:
    """Expected roots over a signed union of orthant regions, with error estimate.

    Each region is pulled back to x-space by the componentwise log; the
    per-orthant coefficient sign flip is measure-preserving for centered
    Gaussian coefficients, so the orthant contributions add with no
    reweighting.
    """
    n = _check_spaces(poly_spaces)
    if W.n != n:
        raise ValidationError(f"signed domain dimension {W.n} does not match system size {n}")
    total = 0.0
    err = 0.0
    for _sign, union in W.regions:
        log_union = DomainUnion(
            tuple(
                DomainBox(tuple(math.log(c) for c in b.lo), tuple(math.log(c) for c in b.hi))
                for b in union.boxes
            )
        )
        part = expected_roots(poly_spaces, log_union, cfg)
        total += part.value
        err += part.error_estimate
    return ExpectedRoots(total, err)


def expected_roots_signed(poly_spaces, W: SignedDomain, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """Expected roots over a signed union of orthant regions."""
    return expected_roots_signed_report(poly_spaces, W, cfg).value
