"""Simulation side: sample Gaussian systems and count their real roots directly.

Everything here is independent of the closed-form pipeline so the two can
cross-check each other. Coefficients are standard normal, drawn from a
counter-based generator (Philox) keyed by (seed, sample index): sample k
is bit-reproducible on its own, regardless of batch layout or worker
count. Within a sample's stream the coefficient vectors are drawn space
by space in the canonical term order.

Root counting works on the normalized residual

    r_i(x) = f_i . V_i(x) / ||V_i(x)|| = sum_a f_{i,a} sqrt(w_{i,a}(x)),

which has the same zero set as the raw exponential sum but stays bounded
by ||f_i||, so sign scans never overflow. Its derivative is available in
closed form through the momentum map,

    dr_i/dx_j = sum_a f_{i,a} sqrt(w_{i,a}(x)) (a_j - m_{i,j}(x)),

which drives both the 1D tangency guard and the 2D Newton polish.

1D counting: sign changes over a uniform half-open cell grid, each
bracket refined by bisection; cells whose endpoint values agree in sign
while the derivative changes sign get subdivided before counting (guards
against near-tangent root pairs hiding inside one cell). 2D counting:
cells where both residuals change sign seed a damped Newton iteration
from the cell center; converged roots are deduplicated and counted, and
non-convergence is recorded in flags, never dropped. 2D counting is
heuristic-complete; statistical acceptance bands absorb rare misses.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import geometry
from .errors import UnsupportedError, ValidationError
from .expectation import DomainBox, as_union
from .spaces import ExpSumSpace

FLAG_TANGENCY_REFINED = 1
FLAG_NEWTON_NONCONVERGED = 2

DEFAULT_CELLS_1D = 4096
DEFAULT_CELLS_2D = 512
DEFAULT_TOL_1D = 1e-12

_NEWTON_MAX_ITER = 60
_NEWTON_RESID_TOL = 1e-10
_DEDUPE_TOL = 1e-8
_GUARD_SPLIT = 16


@dataclass(frozen=True)
class SampledSystem:
    """One draw of Gaussian coefficients for an n-tuple of spaces."""

    spaces: tuple[ExpSumSpace, ...]
    coefficients: tuple[np.ndarray, ...]
    seed: int = 0

    def __post_init__(self):
        if len(self.spaces) != len(self.coefficients):
            raise ValidationError("one coefficient vector per space required")
        for s, f in zip(self.spaces, self.coefficients):
            if len(f) != s.nterms:
                raise ValidationError(
                    f"coefficient vector length {len(f)} does not match {s.nterms} terms"
                )


@dataclass(frozen=True)
class RootCountSample:
    """Root count of one sampled system plus bookkeeping.

    flags is a bitset (FLAG_TANGENCY_REFINED, FLAG_NEWTON_NONCONVERGED);
    roots carries the refined locations, one tuple per counted root.
    """

    count: int
    seed: int
    flags: int
    roots: tuple = ()

    def __post_init__(self):
        if self.count < 0:
            raise ValidationError("count must be nonnegative")


class MCEstimate(NamedTuple):
    mean: float
    stderr: float
    flags: int
    flagged_samples: int


def _stream(seed: int, index: int) -> np.random.Generator:
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, index & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def sample_system(spaces, seed: int, sample_index: int = 0) -> SampledSystem:
    """Standard normal coefficients for sample `sample_index` of stream `seed`."""
    spaces = tuple(spaces)
    g = _stream(seed, sample_index)
    coeffs = tuple(g.standard_normal(s.nterms) for s in spaces)
    return SampledSystem(spaces, coeffs, seed)


def evaluate_system(sys: SampledSystem, x) -> np.ndarray:
    """Normalized residuals f_i . V_i(x)/||V_i(x)||, one entry per equation."""
    n = len(sys.spaces)
    out = np.empty(n)
    for i, (space, f) in enumerate(zip(sys.spaces, sys.coefficients)):
        X = geometry.as_point(x, space.dim)[None, :]
        out[i] = float(np.sqrt(geometry.weights_batch(space, X)[0]) @ f)
    return out


def _grid_tables(space: ExpSumSpace, nodes: np.ndarray):
    """sqrt-weight and derivative tables on a 1D node grid, sample-independent."""
    X = nodes[:, None]
    w = geometry.weights_batch(space, X)
    sq = np.sqrt(w)
    a = space.exponents.astype(np.float64)[:, 0]
    m = w @ a
    return sq, sq * (a[None, :] - m[:, None])


def _count_1d_block(space: ExpSumSpace, F: np.ndarray, nodes: np.ndarray, sq, dq):
    """Sign-change counts for a block of coefficient vectors on one interval.

    Returns (counts, flags, brackets) with brackets a list of (sample, lo, hi)
    for every counted bracket of every sample in the block.
    """
    R = sq @ F.T          # (N, B) residuals at nodes
    D = dq @ F.T          # (N, B) residual derivatives at nodes
    S = np.where(R >= 0, 1, -1)
    DS = np.where(D >= 0, 1, -1)
    change = S[:-1] != S[1:]
    counts = change.sum(axis=0).astype(np.int64)
    flags = np.zeros(F.shape[0], dtype=np.int64)
    brackets = [
        (b, nodes[i], nodes[i + 1]) for i, b in zip(*np.nonzero(change))
    ]
    guard = (~change) & (DS[:-1] != DS[1:])
    for i, b in zip(*np.nonzero(guard)):
        flags[b] |= FLAG_TANGENCY_REFINED
        sub = np.linspace(nodes[i], nodes[i + 1], _GUARD_SPLIT + 1)
        rs = np.sqrt(geometry.weights_batch(space, sub[:, None])) @ F[b]
        ss = np.where(rs >= 0, 1, -1)
        hits = np.nonzero(ss[:-1] != ss[1:])[0]
        counts[b] += len(hits)
        brackets.extend((b, sub[j], sub[j + 1]) for j in hits)
    return counts, flags, brackets


def _bisect_brackets(space: ExpSumSpace, F: np.ndarray, brackets, tol: float) -> list[tuple[int, float]]:
    """Refine sign-change brackets to width <= tol; returns (sample, root) pairs."""
    if not brackets:
        return []
    idx = np.array([b[0] for b in brackets])
    lo = np.array([b[1] for b in brackets])
    hi = np.array([b[2] for b in brackets])
    rlo = np.einsum(
        "km,km->k", np.sqrt(geometry.weights_batch(space, lo[:, None])), F[idx]
    )
    slo = np.where(rlo >= 0, 1, -1)
    while (hi - lo).max() > tol:
        mid = 0.5 * (lo + hi)
        rm = np.einsum(
            "km,km->k", np.sqrt(geometry.weights_batch(space, mid[:, None])), F[idx]
        )
        sm = np.where(rm >= 0, 1, -1)
        left = sm != slo
        hi = np.where(left, mid, hi)
        lo = np.where(left, lo, mid)
    mids = 0.5 * (lo + hi)
    return list(zip(idx.tolist(), mids.tolist()))


def count_roots_1d(
    sys: SampledSystem,
    interval: DomainBox,
    tol: float = DEFAULT_TOL_1D,
    cells: int = DEFAULT_CELLS_1D,
) -> RootCountSample:
    """Sign-change count of the single residual on a uniform half-open grid."""
    if len(sys.spaces) != 1:
        raise ValidationError("count_roots_1d needs a 1-equation system")
    if interval.n != 1:
        raise ValidationError("interval must be one-dimensional")
    space = sys.spaces[0]
    nodes = np.linspace(interval.lo[0], interval.hi[0], cells + 1)
    sq, dq = _grid_tables(space, nodes)
    F = sys.coefficients[0][None, :]
    counts, flags, brackets = _count_1d_block(space, F, nodes, sq, dq)
    refined = _bisect_brackets(space, F, brackets, tol)
    roots = tuple(sorted(r for _, r in refined))
    return RootCountSample(int(counts[0]), sys.seed, int(flags[0]), roots)


def _newton_polish(sys: SampledSystem, x0: np.ndarray, box: DomainBox):
    """Damped Newton on the residual pair; returns the root or None."""
    spaces = sys.spaces
    a = [s.exponents.astype(np.float64) for s in spaces]
    x = x0.copy()
    r = np.empty(2)
    J = np.empty((2, 2))

    def fill(xv):
        for i, space in enumerate(spaces):
            w = geometry.weights_batch(space, xv[None, :])[0]
            sq = np.sqrt(w)
            f = sys.coefficients[i]
            r[i] = f @ sq
            J[i] = (f * sq) @ (a[i] - w @ a[i])
        return np.abs(r).max()

    norm = fill(x)
    for _ in range(_NEWTON_MAX_ITER):
        if norm <= _NEWTON_RESID_TOL:
            return x
        try:
            step = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            return None
        lam = 1.0
        while lam > 1e-6:
            trial = x + lam * step
            trial_norm = fill(trial)
            if trial_norm < norm:
                x, norm = trial, trial_norm
                break
            lam *= 0.5
        else:
            return None
    return x if norm <= _NEWTON_RESID_TOL else None


def _grid_tables_2d(spaces, box: DomainBox, cells: int):
    """Corner grid and per-space sqrt-weight tables, sample-independent."""
    xs = np.linspace(box.lo[0], box.hi[0], cells + 1)
    ys = np.linspace(box.lo[1], box.hi[1], cells + 1)
    XX, YY = np.meshgrid(xs, ys, indexing="ij")
    P = np.stack([XX.ravel(), YY.ravel()], axis=1)
    sqws = [np.sqrt(geometry.weights_batch(sp, P)) for sp in spaces]
    return xs, ys, sqws


def _count_2d(sys: SampledSystem, box: DomainBox, xs, ys, sqws) -> RootCountSample:
    cells = len(xs) - 1
    mixed = []
    for sqw, f in zip(sqws, sys.coefficients):
        s = np.where((sqw @ f).reshape(cells + 1, cells + 1) >= 0, 1, -1)
        same = (
            (s[:-1, :-1] == s[1:, :-1])
            & (s[:-1, :-1] == s[:-1, 1:])
            & (s[:-1, :-1] == s[1:, 1:])
        )
        mixed.append(~same)
    flags = 0
    roots: list[np.ndarray] = []
    for i, j in zip(*np.nonzero(mixed[0] & mixed[1])):
        center = np.array([0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1])])
        root = _newton_polish(sys, center, box)
        if root is None:
            flags |= FLAG_NEWTON_NONCONVERGED
            continue
        if not all(l <= c <= h for l, c, h in zip(box.lo, root, box.hi)):
            continue
        if any(np.abs(root - r).max() <= _DEDUPE_TOL for r in roots):
            continue
        roots.append(root)
    return RootCountSample(len(roots), sys.seed, flags, tuple(tuple(r) for r in roots))


def count_roots_2d(sys: SampledSystem, box: DomainBox, cells: int = DEFAULT_CELLS_2D) -> RootCountSample:
    """Grid sign scan for candidate cells, then damped Newton per candidate."""
    if len(sys.spaces) != 2:
        raise ValidationError("count_roots_2d needs a 2-equation system")
    if box.n != 2:
        raise ValidationError("box must be two-dimensional")
    xs, ys, sqws = _grid_tables_2d(sys.spaces, box, cells)
    return _count_2d(sys, box, xs, ys, sqws)


def _run_blocks(run_block, samples: int, workers: int, block: int = 256):
    """Drive run_block over fixed sample spans; results land in preallocated
    per-sample arrays, so worker count never changes the reduction order."""
    spans = [(s, min(s + block, samples)) for s in range(0, samples, block)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(lambda span: run_block(*span), spans))
    else:
        for span in spans:
            run_block(*span)


def _coeff_block(spaces, seed: int, start: int, stop: int) -> list[np.ndarray]:
    """Per-space coefficient matrices for samples start..stop-1, one stream each."""
    mats = [np.empty((stop - start, s.nterms)) for s in spaces]
    for k in range(start, stop):
        g = _stream(seed, k)
        for mat, space in zip(mats, spaces):
            mat[k - start] = g.standard_normal(space.nterms)
    return mats


def estimate_expected_roots(
    spaces,
    domain,
    samples: int,
    seed: int,
    cells: int | None = None,
    workers: int = 1,
) -> MCEstimate:
    """Mean and standard error of the root count over independent systems."""
    spaces = tuple(spaces)
    n = len(spaces)
    if n not in (1, 2):
        raise UnsupportedError("Monte Carlo root counting is implemented for n in {1, 2}")
    for s in spaces:
        if s.dim != n:
            raise ValidationError(f"space dimension {s.dim} does not match system size {n}")
    if samples < 2:
        raise ValidationError("need at least 2 samples for a standard error")
    union = as_union(domain, n)
    counts = np.zeros(samples, dtype=np.int64)
    flag_bits = np.zeros(samples, dtype=np.int64)

    if n == 1:
        tables = []
        for box in union.boxes:
            nodes = np.linspace(box.lo[0], box.hi[0], (cells or DEFAULT_CELLS_1D) + 1)
            sq, dq = _grid_tables(spaces[0], nodes)
            tables.append((nodes, sq, dq))

        def run_block(start: int, stop: int):
            (F,) = _coeff_block(spaces, seed, start, stop)
            for nodes, sq, dq in tables:
                c, fl, _ = _count_1d_block(spaces[0], F, nodes, sq, dq)
                counts[start:stop] += c
                flag_bits[start:stop] |= fl

    else:
        grid_cells = cells or DEFAULT_CELLS_2D
        tables = [(box, *_grid_tables_2d(spaces, box, grid_cells)) for box in union.boxes]

        def run_block(start: int, stop: int):
            F1, F2 = _coeff_block(spaces, seed, start, stop)
            for k in range(start, stop):
                sys_k = SampledSystem(spaces, (F1[k - start], F2[k - start]), seed)
                for box, xs, ys, sqws in tables:
                    rc = _count_2d(sys_k, box, xs, ys, sqws)
                    counts[k] += rc.count
                    flag_bits[k] |= rc.flags

    _run_blocks(run_block, samples, workers)
    mean = float(counts.mean())
    stderr = float(counts.std(ddof=1) / math.sqrt(samples))
    flags = int(np.bitwise_or.reduce(flag_bits)) if samples else 0
    return MCEstimate(mean, stderr, flags, int(np.count_nonzero(flag_bits)))


def _orthant_flips(space: ExpSumSpace, sign: tuple[int, ...]) -> np.ndarray:
    """Per-term sign of s^a: restricting to orthant s flips f_a by (-1)^(sum of a_i over negative axes)."""
    neg = np.array([c < 0 for c in sign], dtype=bool)
    parity = space.exponents[:, neg].sum(axis=1) % 2
    return np.where(parity == 0, 1.0, -1.0)


def estimate_signed_roots(
    spaces,
    domain,
    samples: int,
    seed: int,
    signs=None,
    cells: int | None = None,
    workers: int = 1,
) -> MCEstimate:
    """Per-sample total root count over sign orthants of the same draw.

    `domain` is a log-coordinate box union; the counted region is exp(domain)
    placed in each requested orthant (default all 2^n). One coefficient draw
    covers all orthants of a sample, so the estimator sees the true
    per-system distribution of the total count, not an inflated variance.
    """
    spaces = tuple(spaces)
    n = len(spaces)
    if n not in (1, 2):
        raise UnsupportedError("Monte Carlo root counting is implemented for n in {1, 2}")
    for s in spaces:
        if s.dim != n:
            raise ValidationError(f"space dimension {s.dim} does not match system size {n}")
    if samples < 2:
        raise ValidationError("need at least 2 samples for a standard error")
    union = as_union(domain, n)
    if signs is None:
        signs = [tuple(1 if (k >> i) & 1 == 0 else -1 for i in range(n)) for k in range(2**n)]
    signs = [tuple(s) for s in signs]
    for s in signs:
        if len(s) != n or any(c not in (-1, 1) for c in s):
            raise ValidationError(f"bad sign vector {s}")
    flips = [[_orthant_flips(sp, s) for sp in spaces] for s in signs]
    counts = np.zeros(samples, dtype=np.int64)
    flag_bits = np.zeros(samples, dtype=np.int64)

    if n == 1:
        tables = []
        for box in union.boxes:
            nodes = np.linspace(box.lo[0], box.hi[0], (cells or DEFAULT_CELLS_1D) + 1)
            sq, dq = _grid_tables(spaces[0], nodes)
            tables.append((nodes, sq, dq))

        def run_block(start: int, stop: int):
            (F,) = _coeff_block(spaces, seed, start, stop)
            for (flip,) in flips:
                Fs = F * flip[None, :]
                for nodes, sq, dq in tables:
                    c, fl, _ = _count_1d_block(spaces[0], Fs, nodes, sq, dq)
                    counts[start:stop] += c
                    flag_bits[start:stop] |= fl

    else:
        grid_cells = cells or DEFAULT_CELLS_2D
        tables = [(box, *_grid_tables_2d(spaces, box, grid_cells)) for box in union.boxes]

        def run_block(start: int, stop: int):
            F1, F2 = _coeff_block(spaces, seed, start, stop)
            for k in range(start, stop):
                for flip in flips:
                    sys_k = SampledSystem(
                        spaces, (F1[k - start] * flip[0], F2[k - start] * flip[1]), seed
                    )
                    for box, xs, ys, sqws in tables:
                        rc = _count_2d(sys_k, box, xs, ys, sqws)
                        counts[k] += rc.count
                        flag_bits[k] |= rc.flags

    _run_blocks(run_block, samples, workers)
    mean = float(counts.mean())
    stderr = float(counts.std(ddof=1) / math.sqrt(samples))
    flags = int(np.bitwise_or.reduce(flag_bits)) if samples else 0
    return MCEstimate(mean, stderr, flags, int(np.count_nonzero(flag_bits)))


def estimate_abs_det(covariances, samples: int, seed: int) -> MCEstimate:
    """Monte Carlo E|det| for independent Gaussian rows r_i ~ N(0, cov_i)."""
    n = len(covariances)
    if n < 1 or n > 4:
        raise UnsupportedError("implemented for 1 <= n <= 4")
    if samples < 2:
        raise ValidationError("need at least 2 samples for a standard error")
    factors = []
    for cov in covariances:
        c = np.atleast_2d(np.asarray(cov, dtype=np.float64))
        if c.shape != (n, n):
            raise ValidationError(f"covariance shape {c.shape}, expected ({n}, {n})")
        eigval, eigvec = np.linalg.eigh(0.5 * (c + c.T))
        if eigval.min() < -1e-10 * max(1.0, float(np.abs(c).max())):
            raise ValidationError("covariance is not positive semidefinite")
        factors.append(eigvec * np.sqrt(np.clip(eigval, 0.0, None)))
    g = _stream(seed, 0)
    total = 0.0
    total_sq = 0.0
    chunk = 1 << 17
    for start in range(0, samples, chunk):
        m = min(chunk, samples - start)
        z = g.standard_normal((m, n, n))
        rows = np.stack([z[:, i, :] @ factors[i].T for i in range(n)], axis=1)
        d = np.abs(np.linalg.det(rows))
        total += float(d.sum())
        total_sq += float((d * d).sum())
    mean = total / samples
    var = max(total_sq / samples - mean * mean, 0.0) * samples / (samples - 1)
    return MCEstimate(mean, math.sqrt(var / samples), 0, 0)
