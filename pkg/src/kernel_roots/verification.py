"""Property suites: the theorems the implementation must reproduce numerically.

Each suite returns a list of CheckResult records so the CLI can print one
pass/fail line per check and tests can assert on the lot. Suites are
deterministic for a fixed seed; random inputs come from a single
default_rng stream per suite.

Suite notes.

additivity: the pullback metric of an Aronszajn product is the sum of the
factors' metrics, and the metric is half the Hessian of the potential.
Both facts are checked, the first exactly (1e-9 on random pairs), the
second against central finite differences.

scaling: E(F1^d1, ..., Fn^dn) = sqrt(d1...dn) E(F1, ..., Fn). The powered
metric is exactly d times the base metric, so the density ratio is
pointwise constant and quadrature/truncation errors cancel in the ratio;
the check exercises the whole algebra-to-quadrature chain rather than
quadrature accuracy.

subadd: E(..., GH) <= E(..., G) + E(..., H). The product ellipsoid is
contained in the Minkowski sum of the factor ellipsoids (concavity of
sqrt), so the slack density is pointwise nonnegative and the integrated
slack can only go negative by roundoff.

vitale: closed-form expected |det| of Gaussian-row matrices (via mixed
volumes of the induced ellipsoids) against direct Monte Carlo, banded at
three standard errors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import convexity, geometry, montecarlo
from .errors import ValidationError
from .expectation import (
    DomainBox,
    QuadratureConfig,
    expected_roots,
    scaling_check,
    subadditivity_check,
)
from .hull import affine_rank
from .spaces import ExpSumSpace, aronszajn_product, make_space


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    measure: float
    threshold: float
    detail: str = ""


def random_space(rng: np.random.Generator, n: int, max_terms: int = 5, max_exp: int = 4) -> ExpSumSpace:
    """Random space whose exponents affinely span R^n (nondegenerate metric a.e.)."""
    while True:
        k = int(rng.integers(n + 1, max_terms + 1)) if max_terms > n else n + 1
        exps = np.unique(rng.integers(0, max_exp + 1, size=(k, n)), axis=0)
        pts = [tuple(int(c) for c in row) for row in exps]
        if len(pts) < n + 1 or affine_rank(pts) < n:
            continue
        c2 = rng.uniform(0.2, 5.0, size=len(pts))
        return make_space(n, {p: float(c) for p, c in zip(pts, c2)})


def random_covariance(rng: np.random.Generator, n: int) -> np.ndarray:
    a = rng.standard_normal((n, n))
    return a @ a.T + 0.05 * np.eye(n)


def verify_identities(n_max: int = 12, tol: float = 1e-12) -> list[CheckResult]:
    out = []
    for n in range(1, n_max + 1):
        r = abs(convexity.tech_identity_residual(n))
        out.append(CheckResult(f"volume-identity n={n}", r < tol, r, tol))
    return out


def _fd_hessian(space: ExpSumSpace, x: np.ndarray, h: float = 1e-4) -> np.ndarray:
    n = space.dim
    pts = [x.copy()]
    for i in range(n):
        for s in (h, -h):
            p = x.copy()
            p[i] += s
            pts.append(p)
    for i in range(n):
        for j in range(i + 1, n):
            for si in (h, -h):
                for sj in (h, -h):
                    p = x.copy()
                    p[i] += si
                    p[j] += sj
                    pts.append(p)
    vals = geometry.potential_batch(space, np.array(pts))
    f0 = vals[0]
    H = np.empty((n, n))
    k = 1
    for i in range(n):
        fp, fm = vals[k], vals[k + 1]
        H[i, i] = (fp - 2.0 * f0 + fm) / h**2
        k += 2
    for i in range(n):
        for j in range(i + 1, n):
            fpp, fpm, fmp, fmm = vals[k : k + 4]
            H[i, j] = H[j, i] = (fpp - fpm - fmp + fmm) / (4.0 * h**2)
            k += 4
    return H


def verify_additivity(seed: int = 1, pairs: int = 100, tol: float = 1e-9, fd_tol: float = 1e-5) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    worst_add = 0.0
    worst_fd = 0.0
    for _ in range(pairs):
        n = int(rng.integers(1, 4))
        b = random_space(rng, n)
        c = random_space(rng, n)
        prod = aronszajn_product(b, c)
        x = rng.uniform(-2.0, 2.0, size=n)
        X = x[None, :]
        g_prod = geometry.metric_batch(prod, X)[0]
        g_sum = geometry.metric_batch(b, X)[0] + geometry.metric_batch(c, X)[0]
        worst_add = max(worst_add, float(np.abs(g_prod - g_sum).max()))
        H = _fd_hessian(prod, x)
        scale = 1.0 + float(np.abs(2.0 * g_prod).max())
        worst_fd = max(worst_fd, float(np.abs(H - 2.0 * g_prod).max()) / scale)
    return [
        CheckResult(f"metric-additivity ({pairs} pairs)", worst_add < tol, worst_add, tol),
        CheckResult(f"hessian-agreement ({pairs} pairs)", worst_fd < fd_tol, worst_fd, fd_tol),
    ]


def _suite_config(n: int) -> QuadratureConfig:
    if n == 1:
        return QuadratureConfig(nodes_per_axis=32, subdivisions=4)
    return QuadratureConfig(nodes_per_axis=16, subdivisions=4, mv_grid=1024)


def verify_scaling(seed: int = 1, count: int = 20, rtol: float = 5e-3) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    out = []
    for k in range(count):
        n = int(rng.integers(1, 3))
        spaces = [random_space(rng, n) for _ in range(n)]
        degrees = [int(rng.integers(1, 5)) for _ in range(n)]
        box = DomainBox((-10.0,) * n, (10.0,) * n)
        chk = scaling_check(spaces, degrees, box, _suite_config(n))
        target = math.sqrt(math.prod(degrees))
        err = abs(chk.ratio - target) / target
        out.append(
            CheckResult(
                f"scaling #{k} n={n} d={tuple(degrees)}",
                err < rtol,
                err,
                rtol,
                f"ratio={chk.ratio:.6f} target={target:.6f}",
            )
        )
    return out


def verify_subadditivity(seed: int = 1, count: int = 50, floor: float = -1e-6) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    out = []
    for k in range(count):
        n = int(rng.integers(1, 3))
        front = [random_space(rng, n) for _ in range(n - 1)]
        g = random_space(rng, n)
        h = random_space(rng, n)
        box = DomainBox((-10.0,) * n, (10.0,) * n)
        chk = subadditivity_check(front, g, h, box, _suite_config(n))
        out.append(
            CheckResult(
                f"subadditivity #{k} n={n}",
                chk.slack >= floor,
                chk.slack,
                floor,
                f"lhs={chk.lhs:.6f} rhs={chk.rhs_sum:.6f}",
            )
        )
    return out


def verify_vitale(seed: int = 1, tuples: int = 20, samples: int = 10**6) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    out = []
    cases = [("identity", [np.eye(2), np.eye(2)])]
    for k in range(tuples):
        cases.append((f"random #{k}", [random_covariance(rng, 2) for _ in range(2)]))
    for name, covs in cases:
        closed = convexity.expected_abs_det_gaussian(covs)
        mc_seed = int(rng.integers(2**62))
        est = montecarlo.estimate_abs_det(covs, samples, mc_seed)
        z = abs(est.mean - closed) / est.stderr
        out.append(
            CheckResult(
                f"vitale {name}",
                z <= 3.0,
                z,
                3.0,
                f"closed={closed:.6f} mc={est.mean:.6f}+-{est.stderr:.1e}",
            )
        )
    return out


SUITES = ("identities", "additivity", "scaling", "subadd", "vitale")


def run_suite(name: str, seed: int = 1, samples: int | None = None) -> list[CheckResult]:
    if name == "identities":
        return verify_identities()
    if name == "additivity":
        return verify_additivity(seed=seed)
    if name == "scaling":
        return verify_scaling(seed=seed)
    if name == "subadd":
        return verify_subadditivity(seed=seed)
    if name == "vitale":
        return verify_vitale(seed=seed, samples=samples or 10**6)
    raise ValidationError(f"unknown suite {name!r}; known: {', '.join(SUITES)}")
