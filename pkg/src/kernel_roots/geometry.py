"""Kernel, potential, momentum map, and pullback metric of a space.

For a space with support A and squared coefficients c2_a, the squared
norm of the evaluation vector at x is ||V(x)||^2 = sum_a c2_a e^{2 a.x}
and everything here derives from its log:

    potential      phi(x) = 1/2 log ||V(x)||^2
    term weights   w_a(x) = c2_a e^{2 a.x} / ||V(x)||^2
    momentum map   m(x)   = sum_a w_a a          (= grad phi, in conv A)
    metric         G(x)   = sum_a w_a (a-m)(a-m)^T   (= 1/2 D^2 phi)
    kernel         log K(x, y) = 2 phi((x+y)/2)

All exponential sums are computed through a shifted log-sum-exp with
shift max_a(log c2_a + 2 a.x), so nothing overflows for |a.x| up to 1e4.
The metric uses the centered covariance form; at extreme x the difference
form sum w a a^T - m m^T would cancel catastrophically.

The *_batch functions evaluate N points at once ((N, n) input) and are
what the quadrature and Monte Carlo layers call; the scalar API wraps the
batch code with validation and the thin result types.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .spaces import ExpSumSpace

SYMMETRY_TOL = 1e-12
PSD_TOL = -1e-10


@dataclass(frozen=True)
class EvaluationPoint:
    """A point x in log coordinates; the positive-orthant point is exp(x)."""

    x: tuple[float, ...]

    def __post_init__(self):
        if not all(np.isfinite(c) for c in self.x):
            raise ValidationError(f"evaluation point has non-finite entries: {self.x}")


@dataclass(frozen=True)
class MomentumVector:
    m: np.ndarray

    def __post_init__(self):
        if not np.all(np.isfinite(self.m)):
            raise ValidationError("momentum vector has non-finite entries")


@dataclass(frozen=True)
class MetricMatrix:
    g: np.ndarray

    def __post_init__(self):
        g = self.g
        if not np.all(np.isfinite(g)):
            raise ValidationError("metric matrix has non-finite entries")
        scale = 1.0 + np.abs(g).max()
        if np.abs(g - g.T).max() > SYMMETRY_TOL * scale:
            raise ValidationError("metric matrix is not symmetric")
        if np.linalg.eigvalsh(g).min() < PSD_TOL * scale:
            raise ValidationError("metric matrix is not positive semidefinite")


def as_point(x, n: int) -> np.ndarray:
    """Coerce an EvaluationPoint or array-like to a finite (n,) float vector."""
    if isinstance(x, EvaluationPoint):
        x = x.x
    arr = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if arr.shape != (n,):
        raise ValidationError(f"point has shape {arr.shape}, expected ({n},)")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"point has non-finite entries: {arr}")
    return arr


def _shifted_terms(space: ExpSumSpace, X: np.ndarray):
    """t_a = log c2_a + 2 a.x per point; returns (z, s, shift) with z = e^{t-shift}."""
    t = 2.0 * X @ space.exponents.T.astype(np.float64) + space.log_c2
    shift = t.max(axis=1)
    z = np.exp(t - shift[:, None])
    return z, z.sum(axis=1), shift


def potential_batch(space: ExpSumSpace, X: np.ndarray) -> np.ndarray:
    _, s, shift = _shifted_terms(space, X)
    return 0.5 * (shift + np.log(s))


def weights_batch(space: ExpSumSpace, X: np.ndarray) -> np.ndarray:
    z, s, _ = _shifted_terms(space, X)
    return z / s[:, None]


def momentum_batch(space: ExpSumSpace, X: np.ndarray) -> np.ndarray:
    return weights_batch(space, X) @ space.exponents.astype(np.float64)


def metric_batch(space: ExpSumSpace, X: np.ndarray) -> np.ndarray:
    """Weighted exponent covariance per point, (N, n, n)."""
    w = weights_batch(space, X)
    a = space.exponents.astype(np.float64)
    m = w @ a
    d = a[None, :, :] - m[:, None, :]
    return np.einsum("pt,pti,ptj->pij", w, d, d)


def log_kernel_norm(space: ExpSumSpace, x) -> float:
    """phi(x) = 1/2 log sum_a c2_a e^{2 a.x}, overflow-safe."""
    X = as_point(x, space.dim)[None, :]
    return float(potential_batch(space, X)[0])


def term_weights(space: ExpSumSpace, x) -> np.ndarray:
    """Probability weights of the terms at x, in the space's term order."""
    X = as_point(x, space.dim)[None, :]
    return weights_batch(space, X)[0]


def momentum(space: ExpSumSpace, x) -> MomentumVector:
    X = as_point(x, space.dim)[None, :]
    return MomentumVector(momentum_batch(space, X)[0])


def metric(space: ExpSumSpace, x) -> MetricMatrix:
    X = as_point(x, space.dim)[None, :]
    return MetricMatrix(metric_batch(space, X)[0])


def kernel(space: ExpSumSpace, x, y) -> float:
    """log K(x, y) = 2 phi((x+y)/2); symmetric, always finite."""
    xv = as_point(x, space.dim)
    yv = as_point(y, space.dim)
    return 2.0 * log_kernel_norm(space, 0.5 * (xv + yv))
