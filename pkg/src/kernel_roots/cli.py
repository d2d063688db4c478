"""Command-line front end.

Subcommands:
  space    algebra on space JSON documents (product, power, hull)
  expect   expected root counts by quadrature and/or Monte Carlo
  verify   property suites with one pass/fail line per check
  bkk      generic root counts from supports (exact integers)

Reports go to standard output as canonical JSON; human-readable progress
lines go to standard error. Exit codes: 0 success, 1 verification
failure, 2 input error, 3 unsupported configuration.

The worker cap for Monte Carlo sampling comes from KERNEL_ROOTS_THREADS
(default 1); results are independent of the worker count by construction.
"""

from __future__ import annotations

import argparse
import functools
import json
import os
import sys
import time

import numpy as np

from . import montecarlo, spaces, verification
from .convexity import LatticePolytope
from .errors import UnsupportedError, ValidationError
from .expectation import (
    DEFAULT_CONFIG,
    DomainBox,
    DomainUnion,
    QuadratureConfig,
    SignedDomain,
    density_batch,
    expected_roots,
    expected_roots_signed_report,
    generic_count,
)
from .reporting import ReportEntry, RunReport, canonical_json, flag_names, render_profile_figure, write_profile_csv
from .spaces import aronszajn_product, power, space_from_dict, space_to_dict, support_hull

DEFAULT_TRUNCATION = 30.0
DEFAULT_MC_SAMPLES = 20000


def _load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: malformed JSON: {exc}") from exc


def _load_space(path: str):
    return space_from_dict(_load_json(path))


def parse_domain(text: str, n: int) -> DomainUnion:
    """`lo:hi` per axis, axes joined by `,`, union members joined by `+`."""
    boxes = []
    for btok in text.split("+"):
        axes = btok.split(",")
        if len(axes) != n:
            raise ValidationError(f"domain box {btok!r} has {len(axes)} axes, expected {n}")
        lo, hi = [], []
        for atok in axes:
            parts = atok.split(":")
            if len(parts) != 2:
                raise ValidationError(f"bad axis range {atok!r}, expected lo:hi")
            try:
                lo.append(float(parts[0]))
                hi.append(float(parts[1]))
            except ValueError as exc:
                raise ValidationError(f"bad axis range {atok!r}: {exc}") from exc
        boxes.append(DomainBox(tuple(lo), tuple(hi)))
    return DomainUnion(tuple(boxes))


def parse_signs(text: str, n: int):
    """'all' or comma-joined sign strings like '++,-+'; returns None for all."""
    if text == "all":
        return None
    out = []
    for tok in text.split(","):
        if len(tok) != n or any(c not in "+-" for c in tok):
            raise ValidationError(f"bad sign condition {tok!r} for n={n}")
        out.append(tuple(1 if c == "+" else -1 for c in tok))
    return out


def _parse_degrees(text: str, n: int) -> list[int]:
    try:
        degrees = [int(tok) for tok in text.split(",")]
    except ValueError as exc:
        raise ValidationError(f"bad degree list {text!r}: {exc}") from exc
    if len(degrees) == 1 and n > 1:
        degrees = degrees * n
    if len(degrees) != n:
        raise ValidationError(f"{len(degrees)} degrees for {n} spaces")
    return degrees


def _workers() -> int:
    raw = os.environ.get("KERNEL_ROOTS_THREADS", "")
    if not raw:
        return 1
    try:
        w = int(raw)
    except ValueError as exc:
        raise ValidationError(f"KERNEL_ROOTS_THREADS={raw!r} is not an integer") from exc
    if w < 1:
        raise ValidationError("KERNEL_ROOTS_THREADS must be >= 1")
    return w


def _quad_config(args) -> QuadratureConfig:
    return QuadratureConfig(
        nodes_per_axis=args.nodes,
        subdivisions=args.subdiv,
        mv_grid=args.mv_grid,
    )


def _cmd_space(args, argv) -> int:
    if args.action == "product":
        if len(args.files) < 2:
            raise ValidationError("product needs at least two space files")
        space = functools.reduce(aronszajn_product, [_load_space(p) for p in args.files])
        doc = space_to_dict(space)
    elif args.action == "power":
        if len(args.files) != 1:
            raise ValidationError("power takes exactly one space file")
        if args.d is None:
            raise ValidationError("power needs --d")
        doc = space_to_dict(power(_load_space(args.files[0]), args.d))
    else:
        if len(args.files) != 1:
            raise ValidationError("hull takes exactly one space file")
        space = _load_space(args.files[0])
        shape = support_hull(space)
        doc = {"n": space.dim, "vertices": [list(v) for v in shape.hull_vertices]}
    print(canonical_json(doc))
    return 0


def _profile(args, spcs, union, cfg):
    """Density samples on a per-axis grid over the union's bounding box."""
    n = union.n
    lo = [min(b.lo[i] for b in union.boxes) for i in range(n)]
    hi = [max(b.hi[i] for b in union.boxes) for i in range(n)]
    axes = [np.linspace(lo[i], hi[i], args.profile) for i in range(n)]
    grids = np.meshgrid(*axes, indexing="ij")
    X = np.stack([g.ravel() for g in grids], axis=1)
    values = density_batch(spcs, X, cfg)
    write_profile_csv(args.profile_out, X, values)
    entries = [ReportEntry("profile_csv", args.profile_out)]
    if not args.no_figure:
        png = render_profile_figure(args.profile_out, axes, values)
        if png is not None:
            entries.append(ReportEntry("profile_figure", png))
    return entries


def _cmd_expect(args, argv) -> tuple[int, RunReport]:
    spcs = [_load_space(p) for p in args.spaces]
    n = len(spcs)
    for s in spcs:
        if s.dim != n:
            raise ValidationError(f"space dimension {s.dim} does not match system size {n}")
    if args.degrees:
        spcs = [power(s, d) for s, d in zip(spcs, _parse_degrees(args.degrees, n))]
    cfg = _quad_config(args)
    if args.domain:
        union = parse_domain(args.domain, n)
    else:
        union = DomainUnion((DomainBox((-DEFAULT_TRUNCATION,) * n, (DEFAULT_TRUNCATION,) * n),))
    signs = parse_signs(args.signed, n) if args.signed else ()
    results: list[ReportEntry] = []
    bits = 0
    quad_value = None
    mc_est = None

    if args.method in ("quad", "both"):
        if args.signed:
            W = SignedDomain.symmetric_from_log_domain(union, signs)
            rep = expected_roots_signed_report(spcs, W, cfg)
        else:
            rep = expected_roots(spcs, union, cfg)
        quad_value = rep.value
        results.append(ReportEntry("expected_roots", rep.value, rep.error_estimate))

    if args.method in ("mc", "both"):
        workers = _workers()
        if args.signed:
            mc_est = montecarlo.estimate_signed_roots(
                spcs, union, args.samples, args.seed, signs=signs, workers=workers
            )
        else:
            mc_est = montecarlo.estimate_expected_roots(
                spcs, union, args.samples, args.seed, workers=workers
            )
        bits |= mc_est.flags
        results.append(ReportEntry("mc_expected_roots", mc_est.mean, mc_est.stderr))
        results.append(
            ReportEntry("mc_flagged_samples", mc_est.flagged_samples, None)
        )

    if args.method == "both" and mc_est.stderr > 0:
        z = abs(quad_value - mc_est.mean) / mc_est.stderr
        results.append(ReportEntry("z_score", z, None))

    if args.profile:
        results.extend(_profile(args, spcs, union, cfg))

    config = {
        "spaces": list(args.spaces),
        "degrees": args.degrees or "",
        "domain": args.domain or f"-{DEFAULT_TRUNCATION:g}:{DEFAULT_TRUNCATION:g} per axis",
        "method": args.method,
        "signed": args.signed or "",
        "samples": args.samples,
        "nodes": cfg.nodes_per_axis,
        "subdiv": cfg.subdivisions,
        "mv_grid": cfg.mv_grid or 0,
        "profile": args.profile or 0,
    }
    report = RunReport("", config, results, flag_names(bits), args.seed, 0.0)
    return 0, report


def _cmd_verify(args, argv) -> tuple[int, RunReport]:
    checks = verification.run_suite(args.suite, seed=args.seed, samples=args.samples)
    results = []
    failures = 0
    for c in checks:
        status = "pass" if c.passed else "FAIL"
        line = f"[{status}] {c.name}: measure={c.measure:.3e} threshold={c.threshold:.3e}"
        if c.detail:
            line += f" ({c.detail})"
        print(line, file=sys.stderr)
        failures += 0 if c.passed else 1
        results.append(
            ReportEntry(
                c.name,
                c.measure,
                None,
                {"passed": c.passed, "threshold": float(c.threshold)},
            )
        )
    config = {"suite": args.suite, "samples": args.samples or 0}
    report = RunReport("", config, results, [], args.seed, 0.0)
    return (1 if failures else 0), report


def _bkk_polytope(path: str) -> LatticePolytope:
    doc = _load_json(path)
    if "terms" in doc:
        return LatticePolytope.from_points(support_hull(space_from_dict(doc)).hull_vertices)
    if "vertices" in doc:
        pts = doc["vertices"]
        if not isinstance(pts, list) or not pts:
            raise ValidationError(f"{path}: vertices must be a nonempty list")
        return LatticePolytope.from_points(pts)
    raise ValidationError(f"{path}: neither a space document nor a polytope document")


def _cmd_bkk(args, argv) -> tuple[int, RunReport]:
    n = len(args.files)
    polys = [_bkk_polytope(p) for p in args.files]
    for p in polys:
        if p.n != n:
            raise ValidationError(f"polytope dimension {p.n} does not match tuple length {n}")
    count = generic_count(polys)
    if not count.is_integer():
        raise ValidationError("generic count came out non-integral; input is inconsistent")
    report = RunReport(
        "",
        {"files": list(args.files)},
        [ReportEntry("generic_count", int(count), None)],
        [],
        None,
        0.0,
    )
    return 0, report


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="kernel-roots",
        description="Expected real roots of Gaussian exponential-sum systems.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("space", help="algebra on space JSON documents")
    sp.add_argument("action", choices=("product", "power", "hull"))
    sp.add_argument("files", nargs="+", help="space JSON files")
    sp.add_argument("--d", type=int, default=None, help="power exponent")

    ex = sub.add_parser("expect", help="expected root count over a domain")
    ex.add_argument("spaces", nargs="+", help="one space JSON file per equation")
    ex.add_argument("--domain", default=None, help="lo:hi per axis, ',' axes, '+' unions")
    ex.add_argument("--degrees", default=None, help="comma-separated power per space")
    ex.add_argument("--method", choices=("quad", "mc", "both"), default="quad")
    ex.add_argument("--signed", default=None, help="'all' or sign strings like '+-,-+'")
    ex.add_argument("--seed", type=int, default=0)
    ex.add_argument("--samples", type=int, default=DEFAULT_MC_SAMPLES)
    ex.add_argument("--nodes", type=int, default=DEFAULT_CONFIG.nodes_per_axis)
    ex.add_argument("--subdiv", type=int, default=DEFAULT_CONFIG.subdivisions)
    ex.add_argument("--mv-grid", type=int, default=None)
    ex.add_argument("--profile", type=int, default=None, help="points per axis for a density CSV")
    ex.add_argument("--profile-out", default="profile.csv")
    ex.add_argument("--no-figure", action="store_true", help="skip the PNG next to the profile CSV")

    vf = sub.add_parser("verify", help="run a property suite")
    vf.add_argument("suite", choices=verification.SUITES)
    vf.add_argument("--seed", type=int, default=1)
    vf.add_argument("--samples", type=int, default=None)

    bk = sub.add_parser("bkk", help="generic root count from supports")
    bk.add_argument("files", nargs="+", help="space or polytope JSON files")

    return p


_VALUE_FLAGS = {
    "--domain", "--degrees", "--method", "--signed", "--seed", "--samples",
    "--nodes", "--subdiv", "--mv-grid", "--profile", "--profile-out", "--d",
}


def _merge_flag_values(argv: list[str]) -> list[str]:
    """Fold `--flag value` into `--flag=value` so values like -30:30 parse."""
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok in _VALUE_FLAGS and i + 1 < len(argv):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(_merge_flag_values(argv))
    started = time.perf_counter()
    try:
        if args.command == "space":
            return _cmd_space(args, argv)
        if args.command == "expect":
            code, report = _cmd_expect(args, argv)
        elif args.command == "verify":
            code, report = _cmd_verify(args, argv)
        else:
            code, report = _cmd_bkk(args, argv)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except UnsupportedError as exc:
        print(f"unsupported: {exc}", file=sys.stderr)
        return 3
    report.command = " ".join(["kernel-roots"] + argv)
    report.wall_time_s = time.perf_counter() - started
    print(report.to_json())
    return code


if __name__ == "__main__":
    sys.exit(main())
