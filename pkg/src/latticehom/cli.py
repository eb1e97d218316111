"""Command-line front end: info, homology, triangle, series and fuzz.

Every document is JSON with sorted keys; rationals are written as "p/q" strings
so that output is exact and byte-for-byte reproducible.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .charlat import CharError, SpinCClass, enumerate_spinc, form, is_characteristic, spinc_of
from .complex import fmt_rational
from .graph import (GraphError, PlumbingGraph, classify, graph_to_text, is_negative_definite,
                    parse_graph)
from .homology import (TOWER, CutoffTooSmall, ModuleDecomposition, RadiusCapExceeded,
                       SeriesError, Summand, delta_split, grading_dims, homology_at,
                       poincare_series, reconstruct_from_series, series_from_dims, stabilize)

SCHEMA = "latticehom-result/1"

EXIT_PARSE = 2
EXIT_RADIUS_CAP = 3
EXIT_DEGENERATE = 4
EXIT_CHECK_FAILED = 5
EXIT_SERIES = 6


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class RunConfig:
    command: str
    graph: str | None = None
    spinc: str = "all"
    n: int = 3
    radius: int = 1
    radius_cap: int = 8
    out: str | None = None
    cache: str | None = None
    jobs: int = 1

    def __post_init__(self):
        if self.n < 1:
            raise CliError(EXIT_PARSE, "--un must be at least 1")
        if self.radius < 1 or self.radius_cap < self.radius:
            raise CliError(EXIT_PARSE, "need 1 <= --radius <= --radius-cap")


# -- documents --------------------------------------------------------------

def dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _q(x) -> str:
    return fmt_rational(Fraction(x))


def graph_hash(G: PlumbingGraph) -> str:
    return hashlib.sha256(graph_to_text(G).encode()).hexdigest()


def summand_doc(s: Summand, with_delta: bool = True) -> dict:
    doc = {"d_grading": _q(s.d), "k": "tower" if s.k == TOWER else s.k,
           "multiplicity": s.mult}
    if with_delta:
        doc["delta"] = s.delta
    return doc


def decomposition_doc(dec: ModuleDecomposition, with_delta: bool = True) -> list[dict]:
    """Summands; series only see gradings, so their reconstructions omit delta."""
    if not with_delta:
        return [{"d_grading": _q(d), "k": "tower" if k == TOWER else k, "multiplicity": c}
                for d, k, c in dec.without_delta()]
    return [summand_doc(s) for s in dec.normalized()]


def parse_decomposition(doc) -> ModuleDecomposition:
    try:
        out = []
        for item in doc["summands"]:
            k = item["k"]
            k = TOWER if k == "tower" else int(k)
            if k < 0:
                raise ValueError("negative length")
            out.append(Summand(Fraction(item["d_grading"]), k, int(item.get("delta", 0)),
                               int(item.get("multiplicity", 1))))
        return ModuleDecomposition(out)
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise CliError(EXIT_PARSE, f"bad decomposition document: {exc}") from None


def series_doc(series) -> dict:
    rows = [{"s": j, "t": _q(e), "coefficient": v}
            for j, p in sorted(series.coeffs.items()) for e, v in sorted(p.items())]
    return {"cutoff": series.N, "tor_shift": series.tor_shift, "terms": rows}


# -- helpers ----------------------------------------------------------------

def load_graph(path: str | None) -> PlumbingGraph:
    if not path:
        raise CliError(EXIT_PARSE, "--graph is required")
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(EXIT_PARSE, f"cannot read {path}: {exc}") from None
    try:
        return parse_graph(text)
    except GraphError as exc:
        raise CliError(EXIT_PARSE, f"{path}: {exc}") from None


def select_spinc(G: PlumbingGraph, sel: str) -> list[SpinCClass]:
    if sel == "all":
        try:
            return enumerate_spinc(G)
        except CharError as exc:
            raise CliError(EXIT_DEGENERATE, str(exc)) from None
    if not sel.startswith("K="):
        raise CliError(EXIT_PARSE, f"--spinc must be 'all' or 'K=c1,c2,...', got {sel!r}")
    body = sel[2:]
    try:
        K = tuple(int(x) for x in body.split(",")) if body else ()
    except ValueError:
        raise CliError(EXIT_PARSE, f"bad representative {body!r}") from None
    if not is_characteristic(G, K):
        raise CliError(EXIT_PARSE, f"{K} is not a characteristic vector of this graph")
    return [spinc_of(G, K)]


def _cache_dir(cfg: RunConfig) -> Path | None:
    d = cfg.cache or os.environ.get("LATTICEHOM_CACHE")
    return Path(d) if d else None


def _cache_key(G: PlumbingGraph, sp: SpinCClass, cfg: RunConfig) -> str:
    blob = json.dumps({"schema": SCHEMA, "graph": graph_hash(G), "spinc": list(sp.key),
                       "n": cfg.n, "radius": cfg.radius, "radius_cap": cfg.radius_cap},
                      sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()


def class_document(G: PlumbingGraph, sp: SpinCClass, n: int, r0: int, r_cap: int) -> dict:
    res = stabilize(G, sp, n, r_start=r0, r_cap=r_cap)
    h = res.homology
    dims = [{"grading": _q(m), "delta": dl, "dim": v} for (m, dl), v in sorted(h.dims.items())]
    return {
        "representative": list(sp.representative),
        "torsion": sp.torsion,
        "divisibility": sp.divisibility,
        "gradings": "absolute" if sp.torsion else f"relative mod {sp.divisibility}",
        "n": n,
        "summands": decomposition_doc(res.decomposition),
        "delta_marginals": {str(k): v for k, v in sorted(delta_split(h).items())},
        "dims": dims,
        "certificate": res.certificate,
    }


def _class_task(args):
    text, key, rep, n, r0, r_cap = args
    G = parse_graph(text)
    sp = spinc_of(G, rep)
    try:
        return class_document(G, sp, n, r0, r_cap)
    except RadiusCapExceeded as exc:
        return {"error": str(exc)}


# -- commands ---------------------------------------------------------------

def run_info(cfg: RunConfig) -> dict:
    G = load_graph(cfg.graph)
    F = form(G)
    c = classify(G)
    return {
        "schema": SCHEMA,
        "graph_hash": graph_hash(G),
        "vertices": list(G.vertices),
        "sigma": F.sigma,
        "chi": F.chi,
        "det": F.det,
        "negative_definite": c.negative_definite,
        "bad_vertices": sorted(c.bad_vertices),
        "fundamental_cycle": list(c.fundamental_cycle) if c.fundamental_cycle else None,
        "rational": c.rational,
        "type_upper_bound": c.type_upper_bound,
        "type_note": "upper bound from the substitution m_v -> min(m_v, -deg v)",
    }


def run_homology(cfg: RunConfig) -> dict:
    G = load_graph(cfg.graph)
    classes = select_spinc(G, cfg.spinc)
    cache = _cache_dir(cfg)
    text = graph_to_text(G)
    docs: list[dict | None] = [None] * len(classes)
    todo = []
    for i, sp in enumerate(classes):
        if cache is not None:
            f = cache / f"{_cache_key(G, sp, cfg)}.json"
            if f.exists():
                try:
                    cached = json.loads(f.read_text())
                    if cached.get("schema") == SCHEMA:
                        docs[i] = cached["class"]
                        continue
                except (OSError, ValueError):
                    pass
        todo.append(i)
    tasks = [(text, classes[i].key, classes[i].representative, cfg.n, cfg.radius,
              cfg.radius_cap) for i in todo]
    if cfg.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as ex:
            results = list(ex.map(_class_task, tasks))
    else:
        results = [_class_task(t) for t in tasks]
    for i, doc in zip(todo, results):
        if "error" in doc:
            raise CliError(EXIT_RADIUS_CAP, doc["error"])
        docs[i] = doc
        if cache is not None:
            cache.mkdir(parents=True, exist_ok=True)
            f = cache / f"{_cache_key(G, classes[i], cfg)}.json"
            f.write_text(dumps({"schema": SCHEMA, "class": doc}))
    return {"schema": SCHEMA, "graph_hash": graph_hash(G), "n": cfg.n,
            "tower_rule": "full length at truncations n and n+1 with the same top grading",
            "classes": docs}


def _report_doc(rep) -> dict:
    return {"check": rep.name, "status": "pass" if rep.ok else "fail",
            "checked": rep.checked, "excluded": rep.excluded,
            "witnesses": rep.violations[:5], "info": rep.info}


def run_triangle(cfg: RunConfig, v: str, margin: int, margin_v: int,
                 inject_fault: bool) -> tuple[dict, bool]:
    from .exactseq import TriangleInstance, les_rank_check, triangle_report

    G = load_graph(cfg.graph)
    if v not in G.vertices:
        raise CliError(EXIT_PARSE, f"unknown vertex {v!r}")
    if margin < 0 or margin_v < 0:
        raise CliError(EXIT_PARSE, "box margins must be non-negative")
    T = TriangleInstance(G, v, margin, margin_v, cfg.n)
    reps = triangle_report(T, corrupt=inject_fault)
    docs = [_report_doc(r) for r in reps]
    if all(is_negative_definite(H) for H in (T.G_minus, G, T.G_plus)):
        try:
            docs.append(_report_doc(les_rank_check(T, cfg.n, r_cap=cfg.radius_cap)))
        except RadiusCapExceeded as exc:
            raise CliError(EXIT_RADIUS_CAP, str(exc)) from None
    else:
        docs.append({"check": "les_ranks", "status": "skipped",
                     "reason": "needs negative-definite G - v, G and G_{+1}(v)"})
    ok = all(d["status"] != "fail" for d in docs)
    return {"schema": SCHEMA, "instance": T.describe(), "checks": docs,
            "status": "pass" if ok else "fail"}, ok


def run_series(cfg: RunConfig, cutoff: int, decomposition: str | None) -> dict:
    if cutoff < 1:
        raise CliError(EXIT_PARSE, "--cutoff must be at least 1")
    if decomposition:
        try:
            doc = json.loads(Path(decomposition).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise CliError(EXIT_PARSE, f"cannot read decomposition: {exc}") from None
        dec = parse_decomposition(doc)
        finite = [s for s in dec.summands if s.k != TOWER]
        if any(s.k >= cutoff for s in finite):
            raise CliError(EXIT_SERIES, f"cutoff too small: a summand has k >= {cutoff}")
        series = poincare_series(dec, cutoff)
        try:
            back = reconstruct_from_series(series)
        except SeriesError as exc:
            raise CliError(EXIT_SERIES, str(exc)) from None
        ok = back.without_delta() == dec.without_delta()
        if not ok:
            raise CliError(EXIT_SERIES, "reconstruction does not reproduce the decomposition")
        return {"schema": SCHEMA, "source": "decomposition", "series": series_doc(series),
                "reconstructed": decomposition_doc(back, with_delta=False), "roundtrip": "pass"}
    G = load_graph(cfg.graph)
    classes = select_spinc(G, cfg.spinc)
    out = []
    for sp in classes:
        if not sp.torsion:
            raise CliError(EXIT_SERIES, "series reconstruction needs a torsion SpinC class")
        try:
            res = stabilize(G, sp, cutoff + 1, r_start=cfg.radius, r_cap=cfg.radius_cap)
        except RadiusCapExceeded as exc:
            raise CliError(EXIT_RADIUS_CAP, str(exc)) from None
        r = res.certificate["radii"][1]
        dims = {k: grading_dims(homology_at(G, sp, r, k)[0]) for k in range(1, cutoff + 2)}
        series = series_from_dims(dims)
        try:
            back = reconstruct_from_series(series)
        except CutoffTooSmall as exc:
            raise CliError(EXIT_SERIES, f"cutoff too small: {exc}") from None
        except SeriesError as exc:
            raise CliError(EXIT_SERIES, str(exc)) from None
        direct = res.decomposition
        if back.without_delta() != direct.without_delta():
            raise CliError(EXIT_SERIES, "measured series disagrees with the direct decomposition")
        if poincare_series(back, cutoff, tor_shift=-1) != series:
            raise CliError(EXIT_SERIES, "reconstruction does not reproduce the measured series")
        out.append({"representative": list(sp.representative), "series": series_doc(series),
                    "reconstructed": decomposition_doc(back, with_delta=False),
                    "direct": decomposition_doc(direct), "roundtrip": "pass"})
    return {"schema": SCHEMA, "source": "graph", "graph_hash": graph_hash(G), "classes": out}


def random_forest(rng: random.Random, max_vertices: int, lo: int, hi: int) -> PlumbingGraph:
    nv = rng.randint(1, max_vertices)
    names = [f"v{i}" for i in range(nv)]
    edges = [(names[rng.randrange(i)], names[i]) for i in range(1, nv) if rng.random() < 0.85]
    return PlumbingGraph.build([(x, rng.randint(lo, hi)) for x in names], edges)


def run_fuzz(cfg: RunConfig, seed: int, count: int, inject_fault: bool) -> tuple[dict, bool]:
    from .exactseq import TriangleInstance, triangle_report

    rng = random.Random(seed)
    items = []
    ok = True
    for _ in range(count):
        G = random_forest(rng, 4, -5, 3)
        v = rng.choice(G.vertices)
        n = rng.randint(1, cfg.n)
        T = TriangleInstance(G, v, 0, 1, n)
        reps = triangle_report(T, corrupt=inject_fault)
        good = all(r.ok for r in reps)
        ok &= good
        items.append({"instance": T.describe(), "status": "pass" if good else "fail",
                      "failed": [r.name for r in reps if not r.ok]})
    return {"schema": SCHEMA, "seed": seed, "count": count, "instances": items,
            "status": "pass" if ok else "fail"}, ok


# -- entry point ------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="latticehom", description="Lattice homology of plumbing forests")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, graph_required=True):
        sp.add_argument("--graph", required=graph_required, help="graph JSON file")
        sp.add_argument("--out", help="write the document here instead of stdout")

    def boxes(sp, un=3):
        sp.add_argument("--un", type=int, default=un, help="truncation exponent n (U^n = 0)")
        sp.add_argument("--radius", type=int, default=1, help="starting box radius")
        sp.add_argument("--radius-cap", type=int, default=8, help="largest box radius tried")

    sp = sub.add_parser("info", help="classification and form invariants")
    common(sp)

    sp = sub.add_parser("homology", help="stabilised truncated homology per SpinC class")
    common(sp)
    boxes(sp)
    sp.add_argument("--spinc", default="all", help="'all' or 'K=c1,c2,...'")
    sp.add_argument("--cache", help="cache directory (default $LATTICEHOM_CACHE)")
    sp.add_argument("--jobs", type=int, default=1, help="worker processes")

    sp = sub.add_parser("triangle", help="check the exact triangle at a vertex")
    common(sp)
    boxes(sp, un=2)
    sp.add_argument("--vertex", required=True, help="distinguished vertex id")
    sp.add_argument("--margin", type=int, default=0,
                    help="box half-width beyond |framing| at the other vertices")
    sp.add_argument("--margin-v", type=int, default=1,
                    help="box half-width beyond |framing| at the vertex")
    sp.add_argument("--inject-fault", action="store_true",
                    help="perturb one coefficient of psi_v (negative control)")

    sp = sub.add_parser("series", help="Poincare series and reconstruction")
    common(sp, graph_required=False)
    boxes(sp)
    sp.add_argument("--spinc", default="all", help="'all' or 'K=c1,c2,...'")
    sp.add_argument("--cutoff", type=int, default=5, help="s-degree cutoff N")
    sp.add_argument("--decomposition", help="decomposition JSON instead of a graph")

    sp = sub.add_parser("fuzz", help="randomised exact-triangle checks")
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--count", type=int, default=10)
    sp.add_argument("--un", type=int, default=3, help="largest truncation exponent")
    sp.add_argument("--out")
    sp.add_argument("--inject-fault", action="store_true")
    return p


def _emit(doc: dict, out: str | None):
    text = dumps(doc)
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig(
            command=args.command,
            graph=getattr(args, "graph", None),
            spinc=getattr(args, "spinc", "all"),
            n=getattr(args, "un", 3),
            radius=getattr(args, "radius", 1),
            radius_cap=getattr(args, "radius_cap", 8),
            out=args.out,
            cache=getattr(args, "cache", None),
            jobs=getattr(args, "jobs", 1),
        )
        code = 0
        if args.command == "info":
            doc = run_info(cfg)
        elif args.command == "homology":
            if args.spinc == "all":
                G = load_graph(cfg.graph)
                if form(G).det == 0:
                    raise CliError(EXIT_DEGENERATE,
                                   "degenerate intersection form: pass --spinc K=...")
            doc = run_homology(cfg)
        elif args.command == "triangle":
            doc, ok = run_triangle(cfg, args.vertex, args.margin, args.margin_v,
                                    args.inject_fault)
            code = 0 if ok else EXIT_CHECK_FAILED
        elif args.command == "series":
            if not args.decomposition and not args.graph:
                raise CliError(EXIT_PARSE, "series needs --graph or --decomposition")
            doc = run_series(cfg, args.cutoff, args.decomposition)
        else:
            if args.seed < 0 or args.seed >= 1 << 64:
                raise CliError(EXIT_PARSE, "--seed must be an unsigned 64-bit integer")
            doc, ok = run_fuzz(cfg, args.seed, args.count, args.inject_fault)
            code = 0 if ok else EXIT_CHECK_FAILED
    except CliError as exc:
        print(f"latticehom: {exc}", file=sys.stderr)
        return exc.code
    _emit(doc, cfg.out)
    return code


if __name__ == "__main__":
    sys.exit(main())
