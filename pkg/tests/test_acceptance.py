"""Exit criteria for the package, one test per criterion.

Each test appends a PASS/FAIL line that conftest prints in the terminal
summary.  Tolerances are fixed here and never tuned after the fact.
"""

import math

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, line_nests
from nestlab.cli import main
from nestlab.errors import TooFar
from nestlab.generators import (
    distance_one_pair,
    random_nest,
    random_orthogonal_quadruple,
    random_projection_pair,
)
from nestlab.linalg import outer, spectral_norm
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
from nestlab.nests import build_similarity, nest_distance, random_perturbed_nest, recover_order_iso
from nestlab.projections import polar_isometry_gap, proj_distance_components, rank_complement_check
from test_nest_algebra import convex_oracle_distance

SQRT2 = math.sqrt(2.0)


def record(number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {title} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_c01_example_family():
    worst = [0.0, 0.0, 0.0]
    for s in (1 / SQRT2, 0.75, 0.8, 0.9, 0.95, 0.99):
        inst = counterexample_family(s)
        worst[0] = max(worst[0], abs(inst.nest_dist - s))
        worst[1] = max(worst[1], abs(spectral_norm(inst.t) - 1.0))
        worst[2] = max(worst[2], abs(inst.alg_dist_lb - 1.0))
    ok = worst[0] <= 1e-10 and worst[1] <= 1e-10 and worst[2] <= 1e-9
    record(1, "example nests at distance s, algebras at distance 1", ok,
           f"max |d-s|={worst[0]:.1e}, max |‖T‖-1|={worst[1]:.1e}, max |lb-1|={worst[2]:.1e}")


def _close_projection_pairs(count, seed):
    rng = np.random.default_rng(seed)
    pairs = []
    while len(pairs) < count:
        p, q = random_projection_pair(rng, int(rng.integers(2, 17)))
        if proj_distance_components(p, q)[2] < 1 - 1e-8:
            pairs.append((p, q))
    return pairs


def test_c02_isometry_gap():
    worst, max_gap, bad = 0.0, 0.0, 0
    for p, q in _close_projection_pairs(1000, 2):
        gap, predicted = polar_isometry_gap(p, q)
        d = spectral_norm(p.p - q.p)
        expected = 2 * math.sin(math.asin(d) / 2)
        dev = max(abs(gap - expected), abs(gap - predicted))
        worst = max(worst, dev)
        max_gap = max(max_gap, gap)
        bad += not (dev < 1e-8 and gap < SQRT2)
    record(2, "||U - P|| = 2 sin(theta/2) < sqrt 2 on 1000 pairs", bad == 0,
           f"max dev={worst:.1e}, max gap={max_gap:.6f}, failures={bad}")


def test_c03_distance_components():
    rng = np.random.default_rng(3)
    worst_max, worst_eq, close, bad = 0.0, 0.0, 0, 0
    for _ in range(1000):
        p, q = random_projection_pair(rng, int(rng.integers(2, 17)))
        a, b, d = proj_distance_components(p, q)
        dev = abs(d - max(a, b))
        worst_max = max(worst_max, dev)
        bad += dev >= 1e-8
        if d < 1 - 1e-6:
            close += 1
            worst_eq = max(worst_eq, abs(a - b))
            bad += abs(a - b) >= 1e-6
    record(3, "||P-Q|| = max(||PQ^perp||, ||P^perp Q||); equal corners below 1", bad == 0,
           f"max dev={worst_max:.1e}, corner gap={worst_eq:.1e} over {close} close pairs")


def test_c04_rank_complements():
    rng = np.random.default_rng(4)
    done, bad, max_gap = 0, 0, 0.0
    while done < 500:
        quad = random_orthogonal_quadruple(rng, int(rng.integers(3, 13)))
        try:
            rep = rank_complement_check(*quad)
        except TooFar:
            continue
        done += 1
        max_gap = max(max_gap, rep.gap)
        bad += not (rep.rank_p_complement == rep.rank_q_complement and rep.index == 0 and rep.gap < SQRT2)
    record(4, "equal complement ranks, index 0, gap < sqrt 2 on 500 quadruples", bad == 0,
           f"failures={bad}, max gap={max_gap:.6f}")


def _perturbed_cases(count=500, seed=5):
    rng = np.random.default_rng(seed)
    for i in range(count):
        m = random_nest(rng, int(rng.integers(2, 11)))
        n = random_perturbed_nest(m, float(rng.uniform(0.0, 0.4)), seed * 100000 + i)
        yield rng, m, n


def test_c05_order_isomorphism():
    bad, worst = 0, 0.0
    for _, m, n in _perturbed_cases():
        try:
            iso = recover_order_iso(m, n)
        except Exception:
            bad += 1
            continue
        d = nest_distance(m, n)
        worst = max(worst, abs(iso.gamma - d))
        monotone = all(b[1] > a[1] for a, b in zip(iso.pairing, iso.pairing[1:]))
        bad += not (abs(iso.gamma - d) <= 1e-8 and monotone and iso.preserves_dimension)
    record(5, "order isomorphism recovered with gamma = d(M,N), dimension preserved", bad == 0,
           f"failures={bad}/500, max |gamma-d|={worst:.1e}")


def test_c06_similarity():
    bad, cases, worst_defect, worst_excess, worst_resid = 0, 0, 0.0, -np.inf, 0.0
    for rng, m, n in _perturbed_cases():
        iso = recover_order_iso(m, n)
        if iso.gamma >= 0.5:
            continue
        cases += 1
        sim = build_similarity(iso)
        worst_defect = max(worst_defect, sim.max_defect)
        worst_excess = max(worst_excess, sim.s_minus_i_norm - 2 * iso.gamma)
        inv = np.linalg.inv(sim.s)
        resid = max(contains(sim.s @ random_algebra_element(rng, m) @ inv, n)[1] for _ in range(3))
        worst_resid = max(worst_resid, resid / sim.condition**2)
        bad += not (sim.max_defect < 1e-8 and sim.s_minus_i_norm <= 2 * iso.gamma + 1e-8
                    and resid < 1e-6 * sim.condition**2)
    record(6, "S M_k = N_k with ||S - I|| <= 2 gamma; S T(M) S^-1 in T(N)", bad == 0 and cases > 0,
           f"{cases} cases, max defect={worst_defect:.1e}, max(||S-I||-2gamma)={worst_excess:.1e}, "
           f"max resid/cond^2={worst_resid:.1e}")


def test_c07_distance_formula():
    rng = np.random.default_rng(7)
    worst, worst_oracle, oracle_checks, bad = 0.0, 0.0, 0, 0
    for i in range(500):
        d = int(rng.integers(2, 7))
        n = random_nest(rng, d)
        t = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        a = nearest_element(t, n)
        dist = arveson_distance(t, n)[0]
        achieved = spectral_norm(t - a)
        dev = abs(achieved - dist)
        worst = max(worst, dev)
        bad += not (dev < 1e-6 and contains(a, n)[0])
        if d <= 4:
            oracle_checks += 1
            odev = abs(convex_oracle_distance(t, n) - dist)
            worst_oracle = max(worst_oracle, odev)
            bad += odev >= 1e-6
    record(7, "||T - nearest|| = Arveson distance; convex oracle agrees", bad == 0,
           f"500 cases, max dev={worst:.1e}; {oracle_checks} oracle checks, max dev={worst_oracle:.1e}")


def test_c08_distance_one():
    rng = np.random.default_rng(8)
    cases = [("lines", d) for d in range(2, 9)]
    kinds = ("lines", "permuted", "ranks")
    cases += [(kinds[i % 3], int(rng.integers(2, 9))) for i in range(100 - len(cases))]
    bad, worst = 0, 0.0
    for kind, dim in cases:
        m, n = distance_one_pair(rng, dim, kind)
        assert nest_distance(m, n) == pytest.approx(1.0, abs=1e-8)
        cert = distance_one_certificate(m, n)
        held = n if cert.side == "n" else m
        ok = cert.achieved >= 1 - 1e-8
        for z, e in cert.witnesses:
            w = outer(z, e)
            ok = ok and abs(spectral_norm(w) - 1) < 1e-8 and contains(w, held)[0]
        worst = max(worst, 1 - cert.achieved)
        bad += not ok
    record(8, "distance-one nests get a unit rank-one witness at distance 1", bad == 0,
           f"{len(cases)} pairs, failures={bad}, max (1 - achieved)={worst:.1e}")


def test_c09_rank_one_gap():
    m, n = line_nests(0.8)
    r1 = rank_one_lower_bound(m, n).bound
    est = kk_distance_estimate(m, n, trials=4, seed=0)
    ok = abs(r1 - 0.8) <= 1e-9 and est.lower_bound >= 1 - 1e-9
    record(9, "rank-one bound 0.8 vs estimate 1 on the s = 0.8 example", ok,
           f"rank-one={r1:.12f}, estimate={est.lower_bound:.12f} via {est.stage}")


def test_c10_verify_cli(capsys):
    code = main(["verify", "--suite", "all", "--trials", "200", "--seed", "42"])
    capsys.readouterr()
    record(10, "nestlab verify --suite all --trials 200 --seed 42 exits 0", code == 0, f"exit={code}")
