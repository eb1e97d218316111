from __future__ import annotations

import numpy as np

from latticehom.charlat import enumerate_spinc
from latticehom.graph import is_negative_definite
from latticehom.homology import compute_homology, decompose_module, homology_at
from latticehom.reduction import cell_levels, cells_to_complex, point_weights, project_box

from conftest import e8, random_forest, star


def test_cell_levels_min_of_corners():
    h = np.array([[0, 3], [5, 1]])
    W = cell_levels(h)
    assert W.shape == (3, 3)
    assert W[1, 1] == 0 and W[0, 1] == 0 and W[2, 1] == 1 and W[1, 2] == 1


def test_point_weights_formula():
    G = star(-2, -2, -2, -2)
    h = point_weights(G, (0, 0, 0, 0), 1)
    # x = e_centre gives K.x + x.M.x = -2
    assert h[2, 1, 1, 1] == -2


def test_projection_matches_unreduced(rng):
    checked = 0
    while checked < 20:
        G = random_forest(rng, 4, -4, -1)
        if not is_negative_definite(G):
            continue
        for sp in enumerate_spinc(G)[:3]:
            full = project_box(G, sp, 2, reduce=False)
            red = project_box(G, sp, 2)
            for n in (1, 3):
                a = compute_homology(cells_to_complex(full.levels, full.base, n))
                b = compute_homology(cells_to_complex(red.levels, red.base, n))
                assert a.dims == b.dims
        checked += 1


def test_projection_matches_lattice_box(rng):
    checked = 0
    while checked < 6:
        G = random_forest(rng, 3, -4, -1)
        if not is_negative_definite(G):
            continue
        for sp in enumerate_spinc(G)[:2]:
            a, _ = homology_at(G, sp, 3, 3, method="box")
            b, _ = homology_at(G, sp, 3, 3, method="projection")
            assert decompose_module(a) == decompose_module(b)
        checked += 1


def test_e8_projects_to_a_point():
    G = e8()
    pr = project_box(G, enumerate_spinc(G)[0], 2)
    assert pr.levels.size == 1 and pr.base == 2
