"""Exhaustive grid reference for small problems.

Every row of a candidate ``P`` is a composition of ``steps`` into ``K``
parts, scaled by ``1 / steps``. Candidates are scored in integer
arithmetic (``det`` of the unscaled integer matrix), so ties are exact and
are broken by the lexicographic order of the entries.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .core import FEASIBILITY_TOL, MixtureMatrix, SourceDistributions
from .errors import InputError, NoFeasiblePointError, SizeOverflowError

ROW_CAP = 10**6
MATRIX_CAP = 10**9


@dataclass(frozen=True)
class GridSpec:
    steps: int
    feasibility_tol: float = FEASIBILITY_TOL
    det_tol: float = 1e-12

    def __post_init__(self):
        if self.steps < 2:
            raise InputError("steps must be >= 2")


@dataclass(frozen=True)
class OracleResult:
    matrix: MixtureMatrix
    objective: float
    candidates: int
    feasible: int


def simplex_grid_size(K: int, steps: int) -> int:
    return math.comb(steps + K - 1, K - 1)


def _grid_counts(K: int, steps: int, cap: int = ROW_CAP) -> np.ndarray:
    if K < 2 or steps < 2:
        raise InputError("need K >= 2 and steps >= 2")
    count = simplex_grid_size(K, steps)
    if count > cap:
        raise SizeOverflowError(f"{count} grid rows exceed the cap of {cap}")
    rows = []
    # stars and bars: bar positions among steps + K - 1 slots
    for bars in itertools.combinations(range(steps + K - 1), K - 1):
        edges = (-1,) + bars + (steps + K - 1,)
        rows.append([edges[i + 1] - edges[i] - 1 for i in range(K)])
    return np.array(rows, dtype=np.int64)


def enumerate_simplex(K: int, steps: int, cap: int = ROW_CAP) -> np.ndarray:
    """All probability vectors of length ``K`` with entries in ``{0, 1/steps, ..., 1}``."""
    return _grid_counts(K, steps, cap) / steps


def _int_det(M: np.ndarray) -> np.ndarray:
    """Exact determinants of a stack of small integer matrices."""
    K = M.shape[-1]
    if K == 1:
        return M[..., 0, 0]
    if K == 2:
        return M[..., 0, 0] * M[..., 1, 1] - M[..., 0, 1] * M[..., 1, 0]
    total = np.zeros(M.shape[:-2], dtype=np.int64)
    for col in range(K):
        minor = np.delete(np.delete(M, 0, axis=-2), col, axis=-1)
        total += (-1) ** col * M[..., 0, col] * _int_det(minor)
    return total


def brute_force_min_det(src: SourceDistributions, grid: GridSpec) -> OracleResult:
    """Feasible grid matrix with the smallest ``|det|``."""
    K, D = src.K, src.probs
    rows = _grid_counts(K, grid.steps)
    n = len(rows)
    if n**K > MATRIX_CAP:
        raise SizeOverflowError(f"{n}**{K} candidate matrices exceed the cap of {MATRIX_CAP}")
    scale = float(grid.steps) ** K
    # all K-tuples with the first row fixed per chunk
    rest = np.array(list(itertools.product(range(n), repeat=K - 1)), dtype=np.int64)
    best_det, best_key, best = None, None, None
    feasible = 0
    for first in range(n):
        idx = np.column_stack([np.full(len(rest), first), rest])
        M = rows[idx]                                   # (B, K, K) integers
        det = _int_det(M)
        ok = np.abs(det) / scale > grid.det_tol
        if not ok.any():
            continue
        M, det = M[ok], det[ok]
        F = np.linalg.solve(M / grid.steps, D)
        good = F.min(axis=(1, 2)) >= -grid.feasibility_tol
        if not good.any():
            continue
        feasible += int(good.sum())
        M, adet = M[good], np.abs(det[good])
        lo = adet.min()
        cand = M[adet == lo].reshape(-1, K * K)
        order = np.lexsort(cand.T[::-1])
        key = tuple(cand[order[0]])
        if best_det is None or lo < best_det or (lo == best_det and key < best_key):
            best_det, best_key, best = lo, key, cand[order[0]].reshape(K, K)
    if best is None:
        raise NoFeasiblePointError("no feasible grid matrix; permutation matrices should always qualify")
    P = best / grid.steps
    return OracleResult(MixtureMatrix(P), best_det / scale, n**K, feasible)
