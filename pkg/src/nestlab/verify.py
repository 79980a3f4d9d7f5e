"""Seeded property suites behind ``nestlab verify``.

Each property draws one random instance per trial from its own
``numpy`` generator seeded by ``(seed, property, trial)``, so results do
not depend on which suites run or in what order.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from nestlab.errors import TooFar
from nestlab.generators import (
    distance_one_pair,
    random_nest,
    random_orthogonal_quadruple,
    random_projection,
    random_projection_pair,
)
from nestlab.io import matrix_to_dict, nest_to_dict
from nestlab.linalg import (
    DEFAULT_TOL,
    Tolerances,
    adjoint,
    orthonormalize,
    outer,
    polar_partial_isometry,
    rank_tol,
    spectral_norm,
)
from nestlab.nest_algebra import (
    arveson_distance,
    contains,
    counterexample_family,
    distance_one_certificate,
    kk_distance_estimate,
    nearest_element,
    random_algebra_element,
    rank_one_lower_bound,
)
from nestlab.nests import (
    build_similarity,
    nest_distance,
    random_perturbed_nest,
    recover_order_iso,
)
from nestlab.projections import (
    Projection,
    halmos_decompose,
    nearest_in_chain,
    polar_isometry_gap,
    proj_distance_components,
    rank_complement_check,
)

SQRT2 = float(np.sqrt(2.0))

# A check returns (deviation, ok, counterexample). ``deviation`` is the
# quantity compared against the property's threshold (0 when not applicable).
Outcome = Tuple[float, bool, Optional[dict]]
Check = Callable[[np.random.Generator, Tolerances], Outcome]


@dataclass(frozen=True)
class Property:
    id: str
    suite: str
    check: Check


REGISTRY: List[Property] = []


def prop(pid: str, suite: str):
    def deco(fn: Check) -> Check:
        REGISTRY.append(Property(pid, suite, fn))
        return fn
    return deco


def _gauss(rng, r, c):
    return rng.standard_normal((r, c)) + 1j * rng.standard_normal((r, c))


def _dim(rng, lo, hi):
    return int(rng.integers(lo, hi + 1))


# -- linear algebra and projections ---------------------------------------------


@prop("linalg.norm_adjoint", "projections")
def _norm_adjoint(rng, tol):
    a = _gauss(rng, _dim(rng, 1, 8), _dim(rng, 1, 8))
    dev = abs(spectral_norm(a) - spectral_norm(adjoint(a)))
    return dev, dev < 1e-10, {"a": matrix_to_dict(a)}


@prop("linalg.polar", "projections")
def _polar(rng, tol):
    r = _dim(rng, 1, 8)
    k = _dim(rng, 1, 8)
    a = _gauss(rng, r, min(r, k)) @ _gauss(rng, min(r, k), k)
    u, h = polar_partial_isometry(a, tol)
    dev = max(spectral_norm(a - u @ h), spectral_norm(u @ adjoint(u) @ u - u))
    return dev, dev < tol.eq_abs * max(1.0, spectral_norm(a)), {"a": matrix_to_dict(a)}


@prop("linalg.rank_orthonormalize", "projections")
def _rank_orth(rng, tol):
    n = _dim(rng, 1, 10)
    v = _gauss(rng, n, _dim(rng, 1, n))
    dev = abs(rank_tol(orthonormalize(v, tol), tol) - v.shape[1])
    return float(dev), dev == 0, {"v": matrix_to_dict(v)}


def _pair_cx(p, q):
    return {"p": matrix_to_dict(p.p), "q": matrix_to_dict(q.p)}


@prop("projections.norm_at_most_one", "projections")
def _norm_le_one(rng, tol):
    p, q = random_projection_pair(rng, _dim(rng, 2, 16))
    d = proj_distance_components(p, q)[2]
    return max(d - 1.0, 0.0), d <= 1.0 + tol.eq_abs, _pair_cx(p, q)


@prop("projections.max_of_corners", "projections")
def _max_corners(rng, tol):
    p, q = random_projection_pair(rng, _dim(rng, 2, 16))
    a, b, d = proj_distance_components(p, q)
    dev = abs(d - max(a, b))
    return dev, dev < 1e-8, _pair_cx(p, q)


@prop("projections.corners_agree_below_one", "projections")
def _corners_agree(rng, tol):
    p, q = random_projection_pair(rng, _dim(rng, 2, 16))
    a, b, d = proj_distance_components(p, q)
    if d >= 1.0 - 1e-6:
        return 0.0, True, None
    dev = abs(a - b)
    return dev, dev < 1e-6 and p.rank == q.rank, _pair_cx(p, q)


@prop("projections.isometry_gap", "projections")
def _isometry_gap(rng, tol):
    p, q = random_projection_pair(rng, _dim(rng, 2, 16))
    d = proj_distance_components(p, q)[2]
    if d >= 1.0 - tol.eq_abs:
        return 0.0, True, None
    gap, predicted = polar_isometry_gap(p, q, tol)
    closed = 2.0 * (1.0 - np.sqrt(max(0.0, 1.0 - d * d)))
    dev = max(abs(gap * gap - closed), abs(gap - predicted))
    return dev, dev < 1e-8 and gap < SQRT2, _pair_cx(p, q)


@prop("projections.halmos_roundtrip", "projections")
def _halmos(rng, tol):
    p, q = random_projection_pair(rng, _dim(rng, 2, 16))
    h = halmos_decompose(p, q, tol)
    pr, qr = h.reconstruct()
    dev = max(spectral_norm(pr - p.p), spectral_norm(qr - q.p),
              spectral_norm(adjoint(h.w) @ h.w - np.eye(p.dim)))
    return dev, dev < 1e-8, _pair_cx(p, q)


@prop("projections.rank_complement", "projections")
def _rank_complement(rng, tol):
    quad = random_orthogonal_quadruple(rng, _dim(rng, 3, 12), tol)
    try:
        rep = rank_complement_check(*quad, tol=tol)
    except TooFar:
        return 0.0, True, None
    ok = (rep.rank_p_complement == rep.rank_q_complement and rep.index == 0
          and rep.gap < SQRT2 - 1e-9 and rep.gap <= rep.gap_estimate + 1e-12)
    cx = {k: matrix_to_dict(x.p) for k, x in zip(("p1", "p2", "q1", "q2"), quad)}
    return float(abs(rep.index)), ok, cx


@prop("projections.chain_uniqueness", "projections")
def _chain_unique(rng, tol):
    d = _dim(rng, 2, 10)
    n = random_nest(rng, d, tol=tol)
    p = random_projection(rng, d)
    if rng.random() < 0.5:
        # a close neighbour of a chain element makes a hit likely
        p = random_perturbed_nest(n, 0.3, int(rng.integers(1 << 31)), tol)[int(rng.integers(len(n)))]
    try:
        nearest_in_chain(p, n.elements, tol)
    except Exception as exc:
        return 1.0, False, {"p": matrix_to_dict(p.p), "chain": nest_to_dict(n), "error": str(exc)}
    return 0.0, True, None


# -- nests ------------------------------------------------------------------------


@prop("nests.pseudometric", "nests")
def _pseudometric(rng, tol):
    d = _dim(rng, 2, 8)
    a, b, c = (random_nest(rng, d, tol=tol) for _ in range(3))
    ab, ba = nest_distance(a, b), nest_distance(b, a)
    ac, bc = nest_distance(a, c), nest_distance(b, c)
    dev = max(abs(ab - ba), nest_distance(a, a), ac - (ab + bc), 0.0)
    cx = {"m": nest_to_dict(a), "n": nest_to_dict(b), "k": nest_to_dict(c)}
    return dev, dev < 1e-8 and 0.0 <= ab <= 1.0 + tol.eq_abs, cx


def _close_pair(rng, tol, strength_hi=0.6):
    n = random_nest(rng, _dim(rng, 2, 10), tol=tol)
    m = random_perturbed_nest(n, float(rng.uniform(0.0, strength_hi)), int(rng.integers(1 << 31)), tol)
    return n, m


@prop("nests.order_isomorphism", "nests")
def _order_iso(rng, tol):
    m, n = _close_pair(rng, tol)
    d = nest_distance(m, n)
    cx = {"m": nest_to_dict(m), "n": nest_to_dict(n)}
    if d >= 1.0 - 1e-6:
        return 0.0, True, None
    try:
        iso = recover_order_iso(m, n, tol)
    except Exception as exc:
        cx["error"] = str(exc)
        return 1.0, False, cx
    monotone = all(b[1] > a[1] for a, b in zip(iso.pairing, iso.pairing[1:]))
    dev = abs(iso.gamma - d)
    return dev, dev < 1e-8 and monotone and iso.preserves_dimension, cx


@prop("nests.similarity", "nests")
def _similarity(rng, tol):
    m, n = _close_pair(rng, tol, strength_hi=0.5)
    cx = {"m": nest_to_dict(m), "n": nest_to_dict(n)}
    if nest_distance(m, n) >= 1.0 - 1e-6:
        return 0.0, True, None
    iso = recover_order_iso(m, n, tol)
    sim = build_similarity(iso, tol)
    s = sim.s
    eye = np.eye(m.dim)
    inv = max(spectral_norm((eye - n[j].p) @ s @ m[i].p) for i, j in iso.pairing)
    t = random_algebra_element(rng, m)
    conj = s @ t @ np.linalg.inv(s)
    resid = contains(conj, n, tol)[1]
    bound_ok = sim.s_minus_i_norm <= 2.0 * iso.gamma + 1e-8 if iso.gamma < 0.5 else sim.s_minus_i_norm <= 2.0 + 1e-8
    ok = inv < 1e-8 and sim.max_defect < 1e-8 and bound_ok and resid < 1e-6 * sim.condition ** 2
    cx["s"] = matrix_to_dict(s)
    return max(inv, sim.max_defect), ok, cx


# -- nest algebras ----------------------------------------------------------------


@prop("algebra.distance_formula", "algebra")
def _distance_formula(rng, tol):
    d = _dim(rng, 2, 6)
    n = random_nest(rng, d, tol=tol)
    t = _gauss(rng, d, d)
    a = nearest_element(t, n)
    dist = arveson_distance(t, n)[0]
    dev = abs(spectral_norm(t - a) - dist)
    ok = dev < 1e-6 and contains(a, n, tol)[0]
    return dev, ok, {"t": matrix_to_dict(t), "n": nest_to_dict(n)}


@prop("algebra.membership_iff_zero_distance", "algebra")
def _membership(rng, tol):
    d = _dim(rng, 2, 6)
    n = random_nest(rng, d, tol=tol)
    t = random_algebra_element(rng, n) if rng.random() < 0.5 else _gauss(rng, d, d)
    inside, _ = contains(t, n, tol)
    dist = arveson_distance(t, n)[0]
    return 0.0 if inside == (dist < tol.eq_abs) else 1.0, inside == (dist < tol.eq_abs), {
        "t": matrix_to_dict(t), "n": nest_to_dict(n)}


@prop("algebra.rank_one_membership", "algebra")
def _rank_one_member(rng, tol):
    d = _dim(rng, 2, 8)
    n = random_nest(rng, d, tol=tol)
    k = int(rng.integers(0, len(n) - 1))
    zeta = n[k + 1].p @ _gauss(rng, d, 1)[:, 0]
    eta = (np.eye(d) - n[k].p) @ _gauss(rng, d, 1)[:, 0]
    w = outer(zeta / np.linalg.norm(zeta), eta / np.linalg.norm(eta))
    inside, resid = contains(w, n, tol)
    return resid, inside, {"w": matrix_to_dict(w), "n": nest_to_dict(n)}


@prop("algebra.estimate_dominates_rank_one", "algebra")
def _kk_dominates(rng, tol):
    d = _dim(rng, 2, 4)
    m = random_nest(rng, d, tol=tol)
    n = random_nest(rng, d, tol=tol)
    seed = int(rng.integers(1 << 31))
    est = kk_distance_estimate(m, n, trials=1, seed=seed, tol=tol)
    r1 = rank_one_lower_bound(m, n).bound
    dev = max(r1 - est.lower_bound, 0.0)
    held = m if est.side == "m" else n
    ok = (dev <= 1e-10 and est.lower_bound <= 1.0 + tol.eq_abs
          and spectral_norm(est.witness) <= 1.0 + tol.eq_abs and contains(est.witness, held, tol)[0])
    return dev, ok, {"m": nest_to_dict(m), "n": nest_to_dict(n)}


@prop("algebra.distance_one", "algebra")
def _distance_one(rng, tol):
    m, n = distance_one_pair(rng, _dim(rng, 2, 8), tol=tol)
    cert = distance_one_certificate(m, n, tol)
    held = n if cert.side == "n" else m
    ok = cert.achieved >= 1.0 - 1e-8
    for z, e in cert.witnesses:
        w = outer(z, e)
        ok = ok and abs(spectral_norm(w) - 1.0) < tol.eq_abs and contains(w, held, tol)[0]
    return max(1.0 - cert.achieved, 0.0), ok, {"m": nest_to_dict(m), "n": nest_to_dict(n)}


@prop("algebra.example_family", "algebra")
def _example(rng, tol):
    s = float(rng.uniform(1.0 / np.sqrt(2.0), 1.0))
    inst = counterexample_family(s, tol)
    dev = max(abs(inst.alg_dist_lb - 1.0), abs(inst.nest_dist - s))
    return dev, dev < 1e-9 and inst.nest_dist < 1.0, {"s": s}


# -- harness self-test ------------------------------------------------------------


def _corrupted_projection(rng, tol):
    p = random_projection(rng, _dim(rng, 2, 6), rank=1)
    bad = p.p + 1e-3 * _gauss(rng, p.dim, p.dim)
    try:
        Projection.from_matrix(bad, tol)
    except Exception:
        return 1.0, False, {"p": matrix_to_dict(bad)}
    return 0.0, True, None


SELFTEST = Property("selftest.corrupted_projection", "selftest", _corrupted_projection)

SUITES = ("projections", "nests", "algebra")


@dataclass
class VerifyReport:
    suite: str
    trials: int
    seed: int
    failures: List[dict] = field(default_factory=list)
    max_deviation: Dict[str, float] = field(default_factory=dict)
    failure_counts: Dict[str, int] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "trials": self.trials,
            "seed": self.seed,
            "ok": self.ok,
            "failures": self.failures,
            "failure_counts": self.failure_counts,
            "max_deviation": self.max_deviation,
        }


def select(suite: str) -> List[Property]:
    if suite == "all":
        return list(REGISTRY)
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; choose from all, {', '.join(SUITES)}")
    return [p for p in REGISTRY if p.suite == suite]


def run_suite(suite: str = "all", trials: int = 200, seed: int = 0,
              tol: Tolerances = DEFAULT_TOL, extra: Tuple[Property, ...] = (),
              max_failures_per_property: int = 3) -> VerifyReport:
    """Run every property of ``suite`` for ``trials`` seeded trials."""
    props = select(suite) + list(extra)
    report = VerifyReport(suite, trials, seed)
    if trials <= 0:
        return report
    for p in props:
        key = zlib.crc32(p.id.encode())
        worst = 0.0
        shown = 0
        for t in range(trials):
            rng = np.random.default_rng([seed, key, t])
            try:
                dev, ok, cx = p.check(rng, tol)
            except Exception as exc:
                dev, ok, cx = float("inf"), False, {"error": f"{type(exc).__name__}: {exc}"}
            worst = max(worst, float(dev))
            if not ok:
                report.failure_counts[p.id] = report.failure_counts.get(p.id, 0) + 1
                if shown < max_failures_per_property:
                    report.failures.append({"property": p.id, "trial": t, "counterexample": cx})
                    shown += 1
        report.max_deviation[p.id] = worst if np.isfinite(worst) else None
    return report
