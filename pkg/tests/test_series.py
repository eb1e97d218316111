from __future__ import annotations

import random
from fractions import Fraction

import pytest

from latticehom.charlat import spinc_of
from latticehom.homology import (TOWER, CutoffTooSmall, ModuleDecomposition, PoincareSeries,
                                 SeriesError, Summand, grading_dims, homology_at,
                                 poincare_series, reconstruct_from_series, series_from_dims,
                                 stabilize, summand_series)

from conftest import single, star


def _dec(*items):
    return ModuleDecomposition([Summand(Fraction(d), k, 0, c) for d, k, c in items])


def test_tower_closed_form():
    s = summand_series(Fraction(0), TOWER, 3)
    assert s.coeffs == {j: {Fraction(2 * i): 1 for i in range(j + 1)} for j in range(4)}


def test_finite_block_series():
    s = poincare_series(_dec((0, 1, 1)), 3)
    assert s.coeffs == {0: {0: 1, 3: 1}, 1: {0: 1, 5: 1}, 2: {0: 1, 7: 1}, 3: {0: 1, 9: 1}}


def test_additivity():
    a, b = _dec((0, 1, 1)), _dec((Fraction(1, 3), 2, 1))
    both = ModuleDecomposition(a.summands + b.summands)
    assert poincare_series(both, 4) == poincare_series(a, 4) + poincare_series(b, 4)


def test_equal_d_tower_and_block():
    X = _dec((0, 1, 1), (0, TOWER, 1))
    assert reconstruct_from_series(poincare_series(X, 4)) == X


@pytest.mark.parametrize("c", [1, -1])
def test_roundtrip_random(c):
    rng = random.Random(11 + c)
    for _ in range(50):
        items = []
        for _ in range(rng.randint(0, 4)):
            den = rng.randint(1, 8)
            d = Fraction(rng.randint(-12, 12), den)
            items.append((d, rng.choice([TOWER, 1, 2, 3, 4, 5]), rng.randint(1, 2)))
        X = _dec(*items)
        assert reconstruct_from_series(poincare_series(X, 6, tor_shift=c)) == X


def test_cutoff_too_small():
    with pytest.raises(CutoffTooSmall):
        reconstruct_from_series(poincare_series(_dec((0, 3, 1)), 3))


def test_inconsistent_series():
    with pytest.raises(SeriesError):
        reconstruct_from_series(PoincareSeries(3, {1: {Fraction(0): 1}}))
    with pytest.raises(SeriesError):
        poincare_series(_dec((0, 1, 1)), 0)


def test_series_from_measured_dims_brieskorn():
    G = star(-1, -2, -3, -7)
    sp = spinc_of(G, (1, 0, 1, 1))
    res = stabilize(G, sp, 5)
    r = res.certificate["radii"][1]
    dims = {n: grading_dims(homology_at(G, sp, r, n)[0]) for n in range(1, 6)}
    back = reconstruct_from_series(series_from_dims(dims))
    assert back.without_delta() == res.decomposition.without_delta()


def test_series_from_dims_needs_consecutive():
    with pytest.raises(SeriesError):
        series_from_dims({1: {0: 1}, 3: {0: 1}})
