"""Acceptance gate.

Each check prints one PASS/FAIL line, under pytest or when run as a script, and
asserts its own condition at the stated tolerance.
"""

from __future__ import annotations

import random
import sys
import time
from fractions import Fraction

import pytest

from latticehom.charlat import WeightCache, enumerate_spinc, spinc_of
from latticehom.complex import (BoxSpec, CharBox, TruncationSpec, boundary_of, build_char_complex,
                                build_complex, verify_d_squared)
from latticehom.exactseq import TriangleInstance, les_rank_check, triangle_report
from latticehom.graph import bump_framing, is_negative_definite
from latticehom.homology import (TOWER, ModuleDecomposition, Summand, grading_dims, homology_at,
                                 poincare_series, reconstruct_from_series, series_from_dims,
                                 stabilize)

from conftest import chain, e8, random_characteristic, random_forest, single, star

RESULTS: dict[str, str] = {}


def report(key: str, title: str, ok: bool, detail: str = ""):
    line = f"[{'PASS' if ok else 'FAIL'}] {key} {title}" + (f": {detail}" if detail else "")
    RESULTS[key] = line
    return ok


# -- worked single-vertex examples -------------------------------------------

def check_plus_one_vertex():
    G = single(1)
    t = time.perf_counter()
    dec = stabilize(G, spinc_of(G, (1,)), 4).decomposition
    dt = time.perf_counter() - t
    ok = dec.labels() == ["M(0,tower)@1"] and dt < 1.0
    return report("A1", "+1 vertex is one tower at 0 in delta 1", ok,
                  f"{dec.labels()} in {dt:.2f}s")


def check_zero_vertex():
    G = single(0)
    t = time.perf_counter()
    main = stabilize(G, spinc_of(G, (0,)), 4).decomposition.labels()
    others = {n: stabilize(G, spinc_of(G, (2 * n,)), 4).decomposition.summands
              for n in range(-5, 6) if n}
    dt = time.perf_counter() - t
    ok = (main == ["M(-1/2,tower)@0", "M(1/2,tower)@1"]
          and all(not s for s in others.values()) and dt < 1.0)
    nonzero = [n for n, s in others.items() if s]
    return report("A2", "0 vertex: two towers at K=0, zero elsewhere", ok,
                  f"{main}, nonzero K=2n for n in {nonzero}, {dt:.2f}s")


def check_boundary_golden():
    bad = []
    G = single(1)
    cx = build_char_complex(G, CharBox(((-15, 15),)), TruncationSpec(8))
    for n in range(-5, 6):
        got = sorted(boundary_of(cx, cx.gen_id((2 * n + 1,), 1)))
        lo, hi = cx.gen_id((2 * n + 1,), 0), cx.gen_id((2 * n + 3,), 0)
        want = sorted([(lo, 0), (hi, n + 1)] if n >= -1 else [(lo, -(n + 1)), (hi, 0)])
        if got != want:
            bad.append(("+1", n))
    G = single(0)
    cx = build_char_complex(G, CharBox(((-12, 12),)), TruncationSpec(8), graded=False)
    for n in range(-5, 6):
        t = cx.gen_id((2 * n,), 0)
        want = [] if n == 0 else sorted([(t, 0), (t, abs(n))])  # 1 + U^0 = 0 over F2
        if sorted(boundary_of(cx, cx.gen_id((2 * n,), 1))) != want:
            bad.append(("0", n))
    return report("A3", "boundary of [K,{v}] on the +1 and 0 vertices", not bad,
                  f"mismatches {bad}")


def check_lens_and_e8():
    G = single(-2)
    decs = [stabilize(G, sp, 4).decomposition for sp in enumerate_spinc(G)]
    lens_ok = (len(decs) == 2 and all(len(d.summands) == 1 and d.summands[0].k == TOWER
                                      for d in decs)
               and sorted(d.summands[0].d for d in decs) == [Fraction(-1, 4), Fraction(1, 4)])
    G = e8()
    t = time.perf_counter()
    (sp,) = enumerate_spinc(G)
    res = stabilize(G, sp, 8, r_cap=3)
    dt = time.perf_counter() - t
    towers = res.decomposition.towers()
    e8_ok = (len(res.decomposition.summands) == 1 and len(towers) == 1
             and towers[0].d == -2 and dt < 60)
    return report("A4", "L(2,1) tops +-1/4 and E8 one tower at -2", lens_ok and e8_ok,
                  f"L(2,1) {[d.labels() for d in decs]}; E8 {res.decomposition.labels()} "
                  f"radii {res.certificate['radii']} in {dt:.1f}s")


# -- property suites -------------------------------------------------------------

def check_lattice_properties():
    rng = random.Random(101)
    counts = {"d2": 0, "delta": 0, "maslov": 0, "minab": 0, "independence": 0}
    checked = 0
    for _ in range(100):
        G = random_forest(rng, 5, -5, 3)
        n = rng.randint(1, 4)
        sp = spinc_of(G, random_characteristic(rng, G))
        cx = build_complex(G, sp, BoxSpec(1, sp.representative), TruncationSpec(n))
        counts["d2"] += len(verify_d_squared(cx).violations)
        for s, t, e in cx.triples:
            if not cx.interior[s]:
                continue
            checked += 1
            counts["delta"] += cx.delta[s] - 1 != cx.delta[t]
            if sp.torsion:
                counts["maslov"] += cx.grading[s] - 1 != cx.grading[t] - 2 * e
        cache = WeightCache(G)
        v = rng.randrange(G.size)
        d = rng.choice([-2, -1, 1, 2])
        cache2 = WeightCache(bump_framing(G, G.vertices[v], d))
        for (K, E), inside in zip(cx.labels, cx.interior):
            if not inside:
                continue
            K2 = tuple(k - d if i == v else k for i, k in enumerate(K))
            for u in range(G.size):
                if (E >> u) & 1:
                    ab = cache.ab(K, E, u)
                    counts["minab"] += min(ab) != 0
                    counts["independence"] += ab != cache2.ab(K2, E, u)
    ok = not any(counts.values()) and checked > 0
    return report("A5", "lattice complex property suite over 100 forests", ok,
                  f"violations {counts}, {checked} interior terms")


def _triangle_instances():
    """50 instances on at most 4 vertices where G - v, G and G_{+1}(v) are negative definite."""
    rng = random.Random(2024)
    out = []
    while len(out) < 50:
        G = random_forest(rng, 4, -4, -1)
        v = rng.choice(G.vertices)
        T = TriangleInstance(G, v, 0, 1, rng.randint(1, 3))
        if all(is_negative_definite(H) for H in (T.G_minus, T.G, T.G_plus)):
            out.append(T)
    return out


_INSTANCES: list = []


def instances():
    if not _INSTANCES:
        _INSTANCES.extend(_triangle_instances())
    return _INSTANCES


def check_triangle_suite():
    failed = []
    comparisons = 0
    for T in instances():
        reps = triangle_report(T)
        comparisons += sum(r.checked for r in reps)
        bad = [r.name for r in reps if not r.ok or r.checked == 0]
        if bad:
            failed.append((T.G.framings, T.v, T.n, bad))
    return report("A6", "chain maps, psi.phi = 0, hat exactness, psi = P.phi_e on 50 instances",
                  not failed, f"{comparisons} checks, failures {failed[:3]}")


def check_les():
    failed = []
    for T in instances():
        for n in (1, 2, 3):
            rep = les_rank_check(T, n)
            if not rep.ok or rep.info["heuristic"]:
                failed.append((T.G.framings, T.v, n, rep.violations[:1]))
    return report("A7", "truncated long exact sequence ranks for n = 1, 2, 3", not failed,
                  f"failures {failed[:3]}")


def check_type_vanishing():
    found = {}
    for name, G, limit in (("D4", star(-2, -2, -2, -2), 1), ("A2", chain(-2, -2), 0)):
        top = 0
        for n in range(1, 7):
            for sp in enumerate_spinc(G):
                h = stabilize(G, sp, n).homology
                top = max([top] + [dl for (_, dl), c in h.dims.items() if c])
        found[name] = (top, limit)
    ok = all(top <= limit for top, limit in found.values())
    return report("A8", "delta-marginals vanish above the type bound for n <= 6", ok,
                  f"(max delta, bound) {found}")


def check_series():
    rng = random.Random(909)
    bad = 0
    for _ in range(100):
        items = []
        for _ in range(rng.randint(0, 4)):
            d = Fraction(rng.randint(-16, 16), rng.randint(1, 8))
            items.append(Summand(d, rng.choice([TOWER, 1, 2, 3, 4, 5]), 0, rng.randint(1, 2)))
        X = ModuleDecomposition(items)
        bad += reconstruct_from_series(poincare_series(X, 6)) != X
    measured = []
    for G, K in ((single(1), (1,)), (single(0), (0,)), (single(0), (2,))):
        sp = spinc_of(G, K)
        res = stabilize(G, sp, 5)
        r = res.certificate["radii"][1]
        dims = {n: grading_dims(homology_at(G, sp, r, n)[0]) for n in range(1, 6)}
        back = reconstruct_from_series(series_from_dims(dims))
        measured.append(back.without_delta() == res.decomposition.without_delta())
    ok = bad == 0 and all(measured)
    return report("A9", "series reconstruction roundtrips and measured dims", ok,
                  f"{bad} random mismatches, measured {measured}")


CHECKS = [check_plus_one_vertex, check_zero_vertex, check_boundary_golden, check_lens_and_e8,
          check_lattice_properties, check_triangle_suite, check_les, check_type_vanishing,
          check_series]


@pytest.mark.parametrize("check", CHECKS, ids=[c.__name__[6:] for c in CHECKS])
def test_acceptance(check, capsys):
    ok = check()
    line = list(RESULTS.values())[-1]
    with capsys.disabled():
        print("\n" + line, flush=True)
    assert ok, line


if __name__ == "__main__":
    results = []
    for c in CHECKS:
        results.append(c())
        print(list(RESULTS.values())[-1], flush=True)
    sys.exit(0 if all(results) else 1)
