from __future__ import annotations

import json

import pytest

from latticehom.cli import (EXIT_CHECK_FAILED, EXIT_DEGENERATE, EXIT_PARSE, EXIT_RADIUS_CAP,
                            EXIT_SERIES, main)


def graph_file(tmp_path, vertices, edges=(), name="g.json"):
    doc = {"vertices": [{"id": v, "framing": m} for v, m in vertices],
           "edges": [list(e) for e in edges]}
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


E8 = ([(f"e{i}", -2) for i in range(1, 9)],
      [(f"e{i}", f"e{i + 1}") for i in range(1, 7)] + [("e5", "e8")])


def test_info_e8(tmp_path, capsys):
    code, doc = run(["info", "--graph", graph_file(tmp_path, *E8)], capsys)
    assert code == 0
    assert doc["negative_definite"] is True
    assert doc["bad_vertices"] == ["e5"]


def test_homology_plus_one_vertex(tmp_path, capsys):
    code, doc = run(["homology", "--graph", graph_file(tmp_path, [("a", 1)]), "--un", "2"],
                    capsys)
    assert code == 0
    (cls,) = doc["classes"]
    assert [(s["d_grading"], s["k"]) for s in cls["summands"]] == [("0", "tower")]


def test_homology_zero_vertex_needs_class(tmp_path, capsys):
    g = graph_file(tmp_path, [("a", 0)])
    code, _ = run(["homology", "--graph", g], capsys)
    assert code == EXIT_DEGENERATE
    code, doc = run(["homology", "--graph", g, "--spinc", "K=0", "--un", "2"], capsys)
    assert code == 0
    assert doc["classes"][0]["representative"] == [0]


def test_parse_errors(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["info", "--graph", str(bad)]) == EXIT_PARSE
    cyc = graph_file(tmp_path, [("a", -2), ("b", -2), ("c", -2)],
                     [("a", "b"), ("b", "c"), ("c", "a")], name="cyc.json")
    assert main(["info", "--graph", cyc]) == EXIT_PARSE
    g = graph_file(tmp_path, [("a", -2)])
    assert main(["homology", "--graph", g, "--spinc", "K=1"]) == EXIT_PARSE
    assert main(["homology", "--graph", g, "--un", "0"]) == EXIT_PARSE
    capsys.readouterr()


def test_radius_cap_exit(tmp_path, capsys):
    g = graph_file(tmp_path, [("a", 1)])
    code = main(["homology", "--graph", g, "--un", "4", "--radius-cap", "1"])
    capsys.readouterr()
    assert code == EXIT_RADIUS_CAP


def test_triangle_and_fault(tmp_path, capsys):
    g = graph_file(tmp_path, [("a", -2), ("b", -3), ("c", -2)], [("a", "b"), ("b", "c")])
    code, doc = run(["triangle", "--graph", g, "--vertex", "b", "--un", "2"], capsys)
    assert code == 0, [c for c in doc["checks"] if c["status"] == "fail"]
    assert {c["check"] for c in doc["checks"]} >= {"les_ranks", "psi_phi_zero"}
    code, doc = run(["triangle", "--graph", g, "--vertex", "b", "--un", "2",
                     "--inject-fault"], capsys)
    assert code == EXIT_CHECK_FAILED
    assert main(["triangle", "--graph", g, "--vertex", "zz"]) == EXIT_PARSE
    capsys.readouterr()


def test_cache_matches_cold_run(tmp_path, capsys):
    g = graph_file(tmp_path, [("a", -2), ("b", -3)], [("a", "b")])
    argv = ["homology", "--graph", g, "--un", "2"]
    _, cold = run(argv, capsys)
    cache = str(tmp_path / "cache")
    _, first = run(argv + ["--cache", cache], capsys)
    _, warm = run(argv + ["--cache", cache], capsys)
    _, par = run(argv + ["--jobs", "2"], capsys)
    assert cold == first == warm == par
    assert any((tmp_path / "cache").iterdir())


def test_output_is_byte_stable(tmp_path, capsys):
    g = graph_file(tmp_path, [("a", -2), ("b", -2)], [("a", "b")])
    outs = []
    for i in range(2):
        out = tmp_path / f"o{i}.json"
        assert main(["homology", "--graph", g, "--un", "2", "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_series_graph_roundtrip(tmp_path, capsys):
    g = graph_file(tmp_path, [("a", -2)])
    code, doc = run(["series", "--graph", g, "--cutoff", "3"], capsys)
    assert code == 0
    assert all(c["roundtrip"] == "pass" for c in doc["classes"])


def test_series_decomposition_cutoff(tmp_path, capsys):
    dec = tmp_path / "dec.json"
    dec.write_text(json.dumps({"summands": [{"d_grading": "0", "k": "tower"},
                                             {"d_grading": "-2", "k": 3}]}))
    code, doc = run(["series", "--decomposition", str(dec), "--cutoff", "5"], capsys)
    assert code == 0 and doc["roundtrip"] == "pass"
    code = main(["series", "--decomposition", str(dec), "--cutoff", "3"])
    assert code == EXIT_SERIES
    assert "cutoff too small" in capsys.readouterr().err


def test_fuzz_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["fuzz", "--seed", "7", "--count", "2", "--un", "2", "--out", str(a)]) == 0
    assert main(["fuzz", "--seed", "7", "--count", "2", "--un", "2", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    code = main(["fuzz", "--seed", "7", "--count", "2", "--un", "2", "--inject-fault"])
    capsys.readouterr()
    assert code == EXIT_CHECK_FAILED


@pytest.mark.parametrize("seed", ["-1", str(1 << 64)])
def test_fuzz_seed_range(seed, capsys):
    assert main(["fuzz", "--seed", seed]) == EXIT_PARSE
