import math
from fractions import Fraction

import numpy as np
import pytest

from extreme_effect.core import SourceDistributions
from extreme_effect.errors import InputError, SizeOverflowError
from extreme_effect.oracle import (
    GridSpec,
    _int_det,
    brute_force_min_det,
    enumerate_simplex,
    simplex_grid_size,
)


def test_enumerate_small():
    rows = {tuple(r) for r in enumerate_simplex(2, 2)}
    assert rows == {(0, 1), (0.5, 0.5), (1, 0)}
    assert len(enumerate_simplex(2, 4)) == 5
    assert len(enumerate_simplex(3, 10)) == 66 == simplex_grid_size(3, 10)


def test_enumerate_rows_valid():
    G = enumerate_simplex(4, 6)
    assert len(G) == math.comb(9, 3)
    assert np.allclose(G.sum(axis=1), 1) and G.min() >= 0
    assert len({tuple(r) for r in G}) == len(G)


def test_caps():
    with pytest.raises(SizeOverflowError):
        enumerate_simplex(3, 10, cap=10)
    with pytest.raises(InputError):
        GridSpec(1)
    src = SourceDistributions.from_rows(np.full((4, 5), 0.2))
    with pytest.raises(SizeOverflowError):
        brute_force_min_det(src, GridSpec(40))


def test_int_det_matches_fractions():
    rng = np.random.default_rng(0)
    M = rng.integers(-9, 10, size=(20, 4, 4))

    def frac_det(A):
        A = [[Fraction(int(x)) for x in row] for row in A]
        n, det = len(A), Fraction(1)
        for c in range(n):
            piv = next((r for r in range(c, n) if A[r][c] != 0), None)
            if piv is None:
                return 0
            if piv != c:
                A[c], A[piv] = A[piv], A[c]
                det = -det
            det *= A[c][c]
            for r in range(c + 1, n):
                f = A[r][c] / A[c][c]
                A[r] = [a - f * b for a, b in zip(A[r], A[c])]
        return det

    assert [int(d) for d in _int_det(M)] == [frac_det(A) for A in M]


def test_square_fixture():
    src = SourceDistributions.from_rows([[0.5, 0.5], [0.25, 0.75]])
    res = brute_force_min_det(src, GridSpec(100))
    assert res.objective == 0.25
    pa, pb = res.matrix.entries[0, 0], res.matrix.entries[1, 0]
    assert {pa, pb} == {0.5, 0.75} or {pa, pb} == {0.5, 0.25}


def test_two_sevenths_exact():
    src = SourceDistributions.from_rows([[0.2, 0.3, 0.5], [0.3, 0.3, 0.4]])
    res = brute_force_min_det(src, GridSpec(70))
    assert res.objective == pytest.approx(1 / 7, abs=1e-15)
    assert sorted(res.matrix.entries[:, 0]) in ([20 / 70, 30 / 70], [40 / 70, 50 / 70])


def test_identical_hits_smallest_grid_det():
    # every invertible P is feasible for identical rows, so only the det guard binds
    src = SourceDistributions.from_rows([[0.5, 0.5], [0.5, 0.5]])
    res = brute_force_min_det(src, GridSpec(10))
    assert res.objective == pytest.approx(0.1)
    assert res.feasible == 110  # all 11**2 candidates minus the 11 singular ones
    assert np.array_equal(res.matrix.entries, [[0.0, 1.0], [0.1, 0.9]])  # lexicographic tie-break


def test_deterministic_and_upper_bound():
    rng = np.random.default_rng(3)
    src = SourceDistributions.from_rows(rng.dirichlet(np.ones(5), size=2))
    a = brute_force_min_det(src, GridSpec(30))
    b = brute_force_min_det(src, GridSpec(30))
    assert np.array_equal(a.matrix.entries, b.matrix.entries)
    from extreme_effect.binary import solve_binary
    exact = solve_binary(src.probs[0], src.probs[1]).decomposition.det_abs
    assert exact <= a.objective + 1e-12
    assert a.objective <= exact + 2 / 30
