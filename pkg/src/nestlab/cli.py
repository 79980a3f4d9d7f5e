"""``nestlab`` command line.

Every command prints one JSON document (or CSV for counterexample sweeps)
on stdout.  Exit codes: 0 ok, 1 property failure, 2 parse error,
3 validation error, 4 nests too far apart, 5 parameter out of range.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from typing import List, Optional

import numpy as np

from nestlab import io
from nestlab.errors import (
    BadFlag,
    DimensionMismatch,
    NestLabError,
    NonFinite,
    NotAProjection,
    OutOfRange,
    RankDeficient,
    TooFar,
)
from nestlab.linalg import Tolerances
from nestlab.nest_algebra import arveson_distance, counterexample_family, kk_distance_estimate
from nestlab.nests import build_similarity, nest_distance, nest_from_flag, recover_order_iso
from nestlab.projections import Projection, halmos_decompose, proj_distance_components
from nestlab.verify import SELFTEST, SUITES, run_suite

log = logging.getLogger("nestlab")

EXIT_OK = 0
EXIT_PROPERTY = 1
EXIT_PARSE = 2
EXIT_INVALID = 3
EXIT_TOO_FAR = 4
EXIT_RANGE = 5


class CliError(Exception):
    def __init__(self, code: int, name: str, message: str):
        super().__init__(message)
        self.code = code
        self.name = name


def _emit(obj) -> None:
    sys.stdout.write(io.dumps(obj) + "\n")


def _load_matrix(path):
    try:
        return io.matrix_from_dict(io.load_json(path))
    except io.ParseError as exc:
        raise CliError(EXIT_PARSE, "PARSE_ERROR", str(exc)) from None


def _load_projection(path, tol):
    m = _load_matrix(path)
    try:
        return Projection.from_matrix(m, tol)
    except (NotAProjection, NonFinite) as exc:
        raise CliError(EXIT_INVALID, "INVALID_PROJECTION", f"{path}: {exc}") from None


def _load_nest(path, tol):
    try:
        obj = io.load_json(path)
        dims, basis = io.nest_file_from_dict(obj)
    except io.ParseError as exc:
        raise CliError(EXIT_PARSE, "PARSE_ERROR", str(exc)) from None
    try:
        return nest_from_flag(dims, basis, tol)
    except (BadFlag, RankDeficient, NonFinite) as exc:
        raise CliError(EXIT_INVALID, "INVALID_NEST", f"{path}: {exc}") from None


def _nest_pair(args, tol):
    m = _load_nest(args.m, tol)
    n = _load_nest(args.n, tol)
    if m.dim != n.dim:
        raise CliError(EXIT_INVALID, "DIMENSION_MISMATCH", f"nests act on C^{m.dim} and C^{n.dim}")
    return m, n


def cmd_dist_proj(args, tol):
    p = _load_projection(args.p, tol)
    q = _load_projection(args.q, tol)
    try:
        a, b, d = proj_distance_components(p, q)
    except DimensionMismatch as exc:
        raise CliError(EXIT_INVALID, "DIMENSION_MISMATCH", str(exc)) from None
    h = halmos_decompose(p, q, tol)
    _emit({
        "d_pq_perp": a,
        "d_pperp_q": b,
        "d": d,
        "halmos": {
            "d00": h.d00, "d10": h.d10, "d01": h.d01, "d11": h.d11,
            "angles": [float(x) for x in h.angles],
        },
    })


def cmd_dist_nest(args, tol):
    m, n = _nest_pair(args, tol)
    _emit({"distance": nest_distance(m, n)})


def _iso(m, n, tol):
    try:
        return recover_order_iso(m, n, tol)
    except TooFar as exc:
        raise CliError(EXIT_TOO_FAR, "TOO_FAR", str(exc)) from None


def cmd_theta(args, tol):
    m, n = _nest_pair(args, tol)
    iso = _iso(m, n, tol)
    _emit({
        "distance": nest_distance(m, n),
        "gamma": iso.gamma,
        "pairing": [list(p) for p in iso.pairing],
        "atom_ranks": [list(r) for r in iso.atom_ranks],
    })


def cmd_similarity(args, tol):
    m, n = _nest_pair(args, tol)
    iso = _iso(m, n, tol)
    sim = build_similarity(iso, tol)
    _emit({
        "gamma": iso.gamma,
        "s": io.matrix_to_dict(sim.s),
        "s_minus_i_norm": sim.s_minus_i_norm,
        "condition": sim.condition,
        "method": sim.method,
        "fallback": sim.fallback,
        "max_defect": sim.max_defect,
    })


def cmd_alg(args, tol):
    m, n = _nest_pair(args, tol)
    est = kk_distance_estimate(m, n, trials=args.trials, seed=args.seed, tol=tol)
    _emit({
        "lower_bound": est.lower_bound,
        "upper_bound": 1.0,
        "side": est.side,
        "stage": est.stage,
        "witness": io.matrix_to_dict(est.witness),
        "trials": est.trials,
        "seed": est.seed,
    })


def cmd_arveson(args, tol):
    t = _load_matrix(args.t)
    n = _load_nest(args.n, tol)
    try:
        d, k = arveson_distance(t, n)
    except DimensionMismatch as exc:
        raise CliError(EXIT_INVALID, "DIMENSION_MISMATCH", str(exc)) from None
    _emit({"distance": d, "argmax": k})


def _parse_s(spec: str) -> List[float]:
    parts = spec.split(":")
    try:
        nums = [float(x) for x in parts]
    except ValueError:
        raise CliError(EXIT_PARSE, "PARSE_ERROR", f"bad --s value {spec!r}") from None
    if len(nums) == 1:
        return nums
    if len(nums) != 3 or nums[2] <= 0:
        raise CliError(EXIT_PARSE, "PARSE_ERROR", "--s sweep must be start:stop:step with step > 0")
    start, stop, step = nums
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return [start + i * step for i in range(max(count, 0))]


def cmd_counterexample(args, tol):
    values = _parse_s(args.s)
    try:
        rows = [counterexample_family(s, tol).row() for s in values]
    except OutOfRange as exc:
        raise CliError(EXIT_RANGE, "OUT_OF_RANGE", str(exc)) from None
    sweep = len(values) > 1 or ":" in args.s
    if args.csv or (sweep and not args.json):
        writer = csv.DictWriter(sys.stdout, fieldnames=["s", "c", "a", "nest_dist", "alg_dist_lb"],
                                lineterminator="\n")
        writer.writeheader()
        for r in rows:
            writer.writerow({k: repr(v) for k, v in r.items()})
    else:
        _emit(rows[0] if not sweep else rows)


def cmd_verify(args, tol):
    extra = (SELFTEST,) if args.inject_failure else ()
    try:
        report = run_suite(args.suite, args.trials, args.seed, tol, extra=extra)
    except ValueError as exc:
        raise CliError(EXIT_PARSE, "PARSE_ERROR", str(exc)) from None
    _emit(report.to_dict())
    for f in report.failures:
        log.error("property %s failed at trial %d", f["property"], f["trial"])
    return EXIT_OK if report.ok else EXIT_PROPERTY


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nestlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dist-proj", help="distance between two projections")
    p.add_argument("p")
    p.add_argument("q")
    p.set_defaults(func=cmd_dist_proj)

    for name, func, text in (
        ("dist-nest", cmd_dist_nest, "Hausdorff distance between two nests"),
        ("theta", cmd_theta, "order isomorphism between nests at distance < 1"),
        ("similarity", cmd_similarity, "invertible S with S M_k = N_k"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("m")
        p.add_argument("n")
        p.set_defaults(func=func)

    p = sub.add_parser("alg", help="certified lower bound for the distance between two nest algebras")
    p.add_argument("m")
    p.add_argument("n")
    p.add_argument("--trials", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_alg)

    p = sub.add_parser("arveson", help="distance from an operator to a nest algebra")
    p.add_argument("t")
    p.add_argument("n")
    p.set_defaults(func=cmd_arveson)

    p = sub.add_parser("counterexample", help="close nests whose algebras are at distance 1")
    p.add_argument("--s", required=True, help="a value, or start:stop:step for a CSV sweep")
    fmt = p.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true")
    fmt.add_argument("--csv", action="store_true")
    p.set_defaults(func=cmd_counterexample)

    p = sub.add_parser("verify", help="run the seeded property suites")
    p.add_argument("--suite", default="all", choices=("all",) + SUITES)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--inject-failure", action="store_true",
                   help="add a deliberately corrupted projection (harness self-test)")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(level=logging.WARNING, stream=sys.stderr, format="nestlab: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        tol = Tolerances.from_env()
    except ValueError as exc:
        log.error("bad NESTLAB_TOL: %s", exc)
        return EXIT_PARSE
    try:
        code = args.func(args, tol)
    except CliError as exc:
        log.error("%s", exc)
        _emit({"error": exc.name, "message": str(exc)})
        return exc.code
    except NestLabError as exc:
        log.error("%s", exc)
        _emit({"error": type(exc).__name__, "message": str(exc)})
        return EXIT_INVALID
    return EXIT_OK if code is None else code


if __name__ == "__main__":
    sys.exit(main())
