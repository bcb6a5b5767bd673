"""Closed-form extreme decomposition for two variants.

With ``P = [[p_A, 1 - p_A], [p_B, 1 - p_B]]`` the determinant is
``p_A - p_B`` and the non-negativity of ``P^-1 D`` reduces to four
half-planes in the ``(p_A, p_B)`` square, parametrized by the extremes
``m <= d_B(x) / d_A(x) <= M`` of the likelihood ratio. On the branch
``p_B > p_A``::

    p_B >= M * p_A        and   p_B >= 1 - m * (1 - p_A)

and the mirrored branch is its reflection through ``(1/2, 1/2)``. The
determinant is smallest where the two lines meet.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    FEASIBILITY_TOL,
    Decomposition,
    Distribution,
    MixtureMatrix,
    SourceDistributions,
    canonicalize,
    decompose,
    trivial_decomposition,
)
from .errors import DegenerateBoundsError, IdenticalDistributionsError, InputError

IDENTICAL_TOL = 1e-12


@dataclass(frozen=True)
class BinaryBounds:
    m: float
    M: float


@dataclass(frozen=True)
class BinaryExtreme:
    """Extreme mixture coefficients on the ``alpha >= 0`` branch.

    ``p_A``/``p_B`` are the probabilities, under A and B, of the latent
    state that is more frequent under B.
    """

    p_A: float
    p_B: float
    alpha: float
    beta: float


@dataclass(frozen=True)
class FeasibleRegion2D:
    quadrangle_pos: tuple[tuple[float, float], ...]
    quadrangle_neg: tuple[tuple[float, float], ...]
    degenerate: bool = False


@dataclass(frozen=True)
class BinarySolution:
    """Canonicalized decomposition plus the binary summary quantities.

    ``mirrored`` is set when canonical state 0 is *not* the state favoured
    by B, i.e. ``P[1, 0] - P[0, 0] == -alpha`` in the returned matrix.
    """

    decomposition: Decomposition
    bounds: BinaryBounds | None
    extreme: BinaryExtreme | None
    mirrored: bool = False
    no_detectable_effect: bool = False

    @property
    def alpha(self) -> float:
        return 0.0 if self.extreme is None else self.extreme.alpha

    @property
    def beta(self) -> float:
        return 0.0 if self.extreme is None else self.extreme.beta


def _probs(d) -> np.ndarray:
    return d.probs if isinstance(d, Distribution) else np.asarray(d, dtype=float)


def compute_bounds(d_A, d_B) -> BinaryBounds:
    """Infimum and supremum of ``d_B(x) / d_A(x)`` over the support.

    Outcomes with zero mass under both variants are ignored; ``d_A(x) = 0 <
    d_B(x)`` makes ``M`` infinite and ``d_B(x) = 0 < d_A(x)`` makes ``m`` zero.
    """
    a, b = _probs(d_A), _probs(d_B)
    if a.shape != b.shape:
        raise InputError("distributions must share a support")
    if np.max(np.abs(a - b)) <= IDENTICAL_TOL:
        raise IdenticalDistributionsError("d_A and d_B coincide")
    keep = (a > 0) | (b > 0)
    a, b = a[keep], b[keep]
    with np.errstate(divide="ignore"):
        ratio = np.where(a > 0, b / np.where(a > 0, a, 1.0), np.inf)
    return BinaryBounds(float(ratio.min()), float(ratio.max()))


def extreme_coefficients(b: BinaryBounds) -> BinaryExtreme:
    m, M = b.m, b.M
    if not m < 1.0 < M:
        raise DegenerateBoundsError(f"need m < 1 < M, got m={m!r}, M={M!r}")
    if math.isinf(M):
        return BinaryExtreme(0.0, 1.0 - m, 1.0 - m, math.inf)
    if M - m < 1e-12:
        raise DegenerateBoundsError("M - m is numerically zero")
    gap = M - m
    p_A = (1.0 - m) / gap
    p_B = M * (1.0 - m) / gap
    alpha = (M - 1.0) * (1.0 - m) / gap
    return BinaryExtreme(p_A, p_B, alpha, M - 1.0)


def bounds_from_coefficients(p_A: float, p_B: float) -> BinaryBounds:
    """Recover ``(m, M)`` from an extreme point: the two boundary lines through it."""
    if not 0 < p_A < p_B < 1:
        raise InputError("need 0 < p_A < p_B < 1")
    return BinaryBounds((1.0 - p_B) / (1.0 - p_A), p_B / p_A)


def binary_matrix(p_A: float, p_B: float) -> np.ndarray:
    return np.array([[p_A, 1.0 - p_A], [p_B, 1.0 - p_B]])


def mirror(e: BinaryExtreme) -> BinaryExtreme:
    """The other extreme solution: swap the two latent states."""
    p_A, p_B = 1.0 - e.p_A, 1.0 - e.p_B
    alpha = p_B - p_A
    beta = alpha / p_A if p_A > 0 else math.inf
    return BinaryExtreme(p_A, p_B, alpha, beta)


def solve_binary(d_A, d_B, tol: float = FEASIBILITY_TOL,
                 variants: tuple[str, str] = ("A", "B"), support=None) -> BinarySolution:
    """Extreme decomposition of two distributions (A = first, B = second)."""
    if isinstance(d_A, Distribution) and support is None:
        support = d_A.support
    src = SourceDistributions.from_rows([_probs(d_A), _probs(d_B)], variants, support)
    try:
        bounds = compute_bounds(src.probs[0], src.probs[1])
    except IdenticalDistributionsError:
        return BinarySolution(trivial_decomposition(src), None, None, no_detectable_effect=True)
    ext = extreme_coefficients(bounds)
    dec = decompose(MixtureMatrix.sanitized(binary_matrix(ext.p_A, ext.p_B)), src, tol)
    canon = canonicalize(dec)
    mirrored = not np.array_equal(canon.P[:, 0], dec.P[:, 0])
    return BinarySolution(canon, bounds, ext, mirrored=mirrored)


def in_region_pos(p_A, p_B, b: BinaryBounds):
    return (p_B >= b.M * p_A) & (p_B >= 1.0 - b.m * (1.0 - p_A))


def in_region_neg(p_A, p_B, b: BinaryBounds):
    return (p_B <= b.m * p_A) & (p_B <= 1.0 - b.M * (1.0 - p_A))


def feasible_region(b: BinaryBounds) -> FeasibleRegion2D:
    """Vertices of the two feasible quadrangles, listed counter-clockwise.

    The positive one is cut from the square by ``p_B = M p_A`` and
    ``p_B = 1 - m (1 - p_A)``; its corners are ``(0, 1 - m)``, the extreme
    point, ``(1/M, 1)`` and ``(0, 1)``. With ``m = 0`` or ``M = inf`` it
    collapses to a segment and ``degenerate`` is set.
    """
    m, M = b.m, b.M
    ext = extreme_coefficients(b)
    inv_M = 0.0 if math.isinf(M) else 1.0 / M
    pos = ((0.0, 1.0 - m), (ext.p_A, ext.p_B), (inv_M, 1.0), (0.0, 1.0))
    neg = tuple((1.0 - x, 1.0 - y) for x, y in pos)
    return FeasibleRegion2D(pos, neg, degenerate=(m == 0.0 or math.isinf(M)))
