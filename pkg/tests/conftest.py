from __future__ import annotations

import random

import pytest

from latticehom.graph import PlumbingGraph


def single(m: int, name: str = "v") -> PlumbingGraph:
    return PlumbingGraph.build([(name, m)])


def chain(*framings: int) -> PlumbingGraph:
    names = [f"c{i}" for i in range(len(framings))]
    return PlumbingGraph.build(list(zip(names, framings)), list(zip(names, names[1:])))


def star(centre: int, *legs: int) -> PlumbingGraph:
    items = [("o", centre)] + [(f"l{i}", m) for i, m in enumerate(legs)]
    return PlumbingGraph.build(items, [("o", f"l{i}") for i in range(len(legs))])


def e8() -> PlumbingGraph:
    names = [f"e{i}" for i in range(1, 9)]
    edges = [(names[i], names[i + 1]) for i in range(6)] + [("e5", "e8")]
    return PlumbingGraph.build([(x, -2) for x in names], edges)


def random_forest(rng: random.Random, max_vertices: int = 4, lo: int = -5,
                  hi: int = 3) -> PlumbingGraph:
    nv = rng.randint(1, max_vertices)
    names = [f"v{i}" for i in range(nv)]
    edges = [(names[rng.randrange(i)], names[i]) for i in range(1, nv) if rng.random() < 0.85]
    return PlumbingGraph.build([(x, rng.randint(lo, hi)) for x in names], edges)


def random_characteristic(rng: random.Random, G: PlumbingGraph, spread: int = 3):
    return tuple(m % 2 + 2 * rng.randint(-spread, spread) for m in G.framings)


@pytest.fixture
def rng():
    return random.Random(20240611)
