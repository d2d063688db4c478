"""Weighted exponential-sum spaces and their product semigroup.

A space is a finite support A of integer exponent vectors in Z^n together
with a positive squared coefficient c2_a for each exponent. The functions
it models are f(x) = sum_a f_a * alpha_a * e^{a.x} with alpha_a = sqrt(c2_a)
and i.i.d. standard normal f_a; only the squared coefficients ever enter
the algebra, so that is what we store.

The product of two spaces has support B + C (Minkowski sum) and squared
coefficients given by the convolution

    c2_a = sum over b + c = a of (left c2_b) * (right c2_c),

which keeps small integer examples exact: the d-th power of {0: 1, 1: 1}
carries the binomial coefficients C(d, a). Coefficients are kept as the
Python numbers they were given (int stays int), so integer inputs convolve
exactly; mixed inputs fall back to float arithmetic.

Exponents may be negative (Laurent supports). Terms are kept sorted
lexicographically by exponent; that ordering is the canonical one for
serialization and equality.
"""

from __future__ import annotations

import math
import operator
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ValidationError
from . import hull

Exponent = tuple[int, ...]


@dataclass(frozen=True)
class ExpSumSpace:
    """Immutable weighted support: dim n plus lex-sorted (exponent, c2) pairs."""

    dim: int
    terms: tuple[tuple[Exponent, float], ...]

    @cached_property
    def exponents(self) -> np.ndarray:
        """Term exponents as an (m, n) int64 array, lex order."""
        return np.array([e for e, _ in self.terms], dtype=np.int64).reshape(len(self.terms), self.dim)

    @cached_property
    def log_c2(self) -> np.ndarray:
        return np.log(np.array([c for _, c in self.terms], dtype=np.float64))

    @property
    def nterms(self) -> int:
        return len(self.terms)

    def __repr__(self) -> str:
        return f"ExpSumSpace(dim={self.dim}, nterms={self.nterms})"


@dataclass(frozen=True)
class SupportShape:
    """Convex hull of a support: vertex list in canonical order.

    1D: [min, max]; full-dimensional 2D supports: CCW cycle starting at the
    lexicographically smallest vertex; all other cases: lex-sorted.
    """

    hull_vertices: tuple[Exponent, ...]

    def scaled(self, d: int) -> "SupportShape":
        return SupportShape(tuple(tuple(d * c for c in v) for v in self.hull_vertices))


def _check_exponent(e, n: int) -> Exponent:
    try:
        tup = tuple(operator.index(c) for c in e)
    except TypeError as exc:
        raise ValidationError(f"exponent vector {e!r} has non-integer entries") from exc
    if len(tup) != n:
        raise ValidationError(f"exponent vector {tup} has length {len(tup)}, expected {n}")
    return tup


def _check_coefficient(c) -> float:
    if isinstance(c, bool) or not isinstance(c, (int, float)):
        raise ValidationError(f"squared coefficient {c!r} is not a number")
    if not math.isfinite(c) or c <= 0:
        raise ValidationError(f"squared coefficient {c!r} must be finite and > 0")
    return c


def make_space(n: int, terms) -> ExpSumSpace:
    """Validate and canonicalize a (dim, [(exponent, c2), ...]) description.

    `terms` is an iterable of (exponent, c2) pairs or a mapping exponent -> c2.
    """
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ValidationError(f"dimension must be a positive integer, got {n!r}")
    if isinstance(terms, dict):
        terms = terms.items()
    packed = {}
    for e, c in terms:
        tup = _check_exponent(e, n)
        if tup in packed:
            raise ValidationError(f"duplicate exponent {tup}")
        packed[tup] = _check_coefficient(c)
    if not packed:
        raise ValidationError("a space needs at least one term")
    return ExpSumSpace(n, tuple(sorted(packed.items())))


def aronszajn_product(left: ExpSumSpace, right: ExpSumSpace) -> ExpSumSpace:
    """Product space: Minkowski-sum support, convolution of squared coefficients."""
    if left.dim != right.dim:
        raise ValidationError(f"dimension mismatch: {left.dim} vs {right.dim}")
    acc: dict[Exponent, float] = {}
    for b, cb in left.terms:
        for c, cc in right.terms:
            a = tuple(x + y for x, y in zip(b, c))
            acc[a] = acc.get(a, 0) + cb * cc
    return ExpSumSpace(left.dim, tuple(sorted(acc.items())))


def power(space: ExpSumSpace, d: int) -> ExpSumSpace:
    """d-th product power of a space, d >= 1."""
    if not isinstance(d, int) or isinstance(d, bool) or d < 1:
        raise ValidationError(f"power requires an integer d >= 1, got {d!r}")
    out = space
    for _ in range(d - 1):
        out = aronszajn_product(out, space)
    return out


def kostlan_space(n: int) -> ExpSumSpace:
    """Linear space with support {0, e_1, ..., e_n}, all squared coefficients 1."""
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ValidationError(f"dimension must be a positive integer, got {n!r}")
    terms = [((0,) * n, 1)]
    for i in range(n):
        e = [0] * n
        e[i] = 1
        terms.append((tuple(e), 1))
    return make_space(n, terms)


def support_hull(space: ExpSumSpace) -> SupportShape:
    """Exact convex hull of the support (dim <= 3)."""
    pts = [e for e, _ in space.terms]
    return SupportShape(tuple(hull.hull_vertices(pts)))


def space_to_dict(space: ExpSumSpace) -> dict:
    """Canonical JSON document structure: terms lex-sorted, c2 as given."""
    return {
        "n": space.dim,
        "terms": [{"e": list(e), "c2": c} for e, c in space.terms],
    }


def space_from_dict(doc) -> ExpSumSpace:
    if not isinstance(doc, dict):
        raise ValidationError("space document must be a JSON object")
    missing = {"n", "terms"} - set(doc)
    if missing:
        raise ValidationError(f"space document missing fields: {sorted(missing)}")
    terms = doc["terms"]
    if not isinstance(terms, list):
        raise ValidationError("space document field 'terms' must be a list")
    pairs = []
    for t in terms:
        if not isinstance(t, dict) or "e" not in t or "c2" not in t:
            raise ValidationError(f"malformed term entry {t!r}")
        pairs.append((t["e"], t["c2"]))
    return make_space(doc["n"], pairs)
