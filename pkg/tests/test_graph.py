from __future__ import annotations

import pytest

from latticehom.graph import (GraphError, NotNegativeDefinite, PlumbingGraph, adjoin_e,
                              bad_vertices, bump_framing, classify, components, delete_vertex,
                              determinant, fundamental_cycle, graph_to_text,
                              intersection_matrix, is_negative_definite, is_rational,
                              parse_graph, signature_chi, type_upper_bound)

from conftest import chain, e8, single, star


def test_parse_single_vertex():
    G = parse_graph('{"vertices": [{"id": "v", "framing": 1}], "edges": []}')
    assert G.vertices == ("v",) and G.framings == (1,) and not G.edges


def test_parse_roundtrip():
    G = star(-2, -2, -2, -2)
    assert parse_graph(graph_to_text(G)) == G


def test_parse_whitespace_insensitive():
    a = parse_graph('{"vertices":[{"id":"a","framing":-2},{"id":"b","framing":-3}],"edges":[["a","b"]]}')
    b = parse_graph('{\n "vertices" : [ {"id":"a", "framing":-2},\n {"id":"b","framing":-3} ],\n'
                    ' "edges": [ ["a", "b"] ] }')
    assert a == b


@pytest.mark.parametrize("text", [
    '{"vertices": [{"id": "v", "framing": 1}], "extra": 1}',
    '{"vertices": [{"id": "v", "framing": 1.5}]}',
    '{"vertices": [{"id": "v", "framing": true}]}',
    '{"vertices": [{"id": "v", "framing": 1}, {"id": "v", "framing": 2}]}',
    '{"vertices": [{"id": "a", "framing": 1}], "edges": [["a", "b"]]}',
    '{"vertices": [{"id": "a", "framing": 1}], "edges": [["a", "a"]]}',
    '{"vertices": [{"id": "a", "framing": 1, "colour": "red"}]}',
    '[1, 2]',
    'not json',
])
def test_parse_rejects(text):
    with pytest.raises(GraphError):
        parse_graph(text)


def test_cycle_rejected():
    with pytest.raises(GraphError, match="cycle"):
        PlumbingGraph.build([("a", -2), ("b", -2), ("c", -2)],
                            [("a", "b"), ("b", "c"), ("c", "a")])


def test_duplicate_edge_rejected():
    with pytest.raises(GraphError):
        PlumbingGraph.build([("a", -2), ("b", -2)], [("a", "b"), ("b", "a")])


def test_intersection_matrix_and_det():
    G = chain(-2, -3)
    assert intersection_matrix(G) == [[-2, 1], [1, -3]]
    assert determinant(intersection_matrix(G)) == 5
    assert determinant(intersection_matrix(e8())) == 1
    assert determinant([]) == 1
    assert determinant(intersection_matrix(single(0))) == 0


def test_signature():
    assert signature_chi(single(1)) == (1, 1)
    assert signature_chi(single(0)) == (0, 1)
    assert signature_chi(e8()) == (-8, 8)
    # a zero pivot needs the off-diagonal step: [[0, 1], [1, 0]] has signature 0
    assert signature_chi(chain(0, 0)) == (0, 2)
    # eigenvalues 0 and +-sqrt(2)
    assert signature_chi(chain(0, 0, 0)) == (0, 3)


def test_negative_definite():
    assert is_negative_definite(e8())
    assert is_negative_definite(chain(-2, -2))
    assert not is_negative_definite(single(1))
    assert not is_negative_definite(chain(-1, -1))


def test_bad_vertices():
    G = star(-2, -2, -2, -2)
    assert bad_vertices(G) == frozenset({"o"})
    assert bad_vertices(chain(-2, -2)) == frozenset()


def test_fundamental_cycle():
    assert fundamental_cycle(star(-2, -2, -2, -2)) == (2, 1, 1, 1)
    assert fundamental_cycle(e8()) == (2, 3, 4, 5, 6, 4, 2, 3)
    with pytest.raises(NotNegativeDefinite):
        fundamental_cycle(single(1))


def test_rationality():
    assert is_rational(e8())
    assert is_rational(star(-2, -2, -2, -2))
    assert is_rational(chain(-2, -2))
    assert not is_rational(star(-1, -2, -3, -7))


def test_type_upper_bound():
    assert type_upper_bound(star(-2, -2, -2, -2)) == 0
    assert type_upper_bound(star(-1, -2, -3, -7)) == 1
    assert type_upper_bound(single(1)) is None


def test_classify():
    c = classify(e8())
    assert c.negative_definite and c.rational and c.type_upper_bound == 0
    c = classify(single(1))
    assert not c.negative_definite and c.fundamental_cycle is None and c.rational is None


def test_derived_graphs():
    G = chain(-2, -3, -2)
    Gm = delete_vertex(G, "c1")
    assert Gm.vertices == ("c0", "c2") and not Gm.edges
    Gp = bump_framing(G, "c1", 1)
    assert Gp.framings == (-2, -2, -2) and Gp.edges == G.edges
    Ge = adjoin_e(G, "c1")
    assert Ge.vertices[-1] == "e" and Ge.framings[-1] == -1 and (1, 3) in Ge.edges
    with pytest.raises(GraphError):
        adjoin_e(Ge, "c0", "e")


def test_components():
    G = PlumbingGraph.build([("a", -2), ("b", -2), ("c", -2)], [("a", "c")])
    assert components(G) == [[0, 2], [1]]
