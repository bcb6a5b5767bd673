"""Distributions, mixture matrices and decompositions ``d = P @ f``.

Conventions used throughout the package:

* a problem instance has ``K`` variants and a shared support of ``N`` outcomes;
* source distributions are stacked as the rows of a ``K x N`` array ``D``;
* ``P[i, j]`` is the probability of latent state ``j`` under variant ``i``;
* the basis ``F`` is a ``K x N`` array whose row ``j`` is the outcome
  distribution of latent state ``j``, so that ``D == P @ F``.

All value types are frozen dataclasses holding read-only numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    BadPermutationError,
    BadTotalError,
    InfeasibleMatrixError,
    InputError,
    LengthMismatchError,
    NegativeMassError,
    SingularMatrixError,
)

NEG_TOL = 1e-12        # entries above -NEG_TOL count as non-negative
SUM_TOL = 1e-12        # stored distributions / matrix rows sum to 1 within this
RENORM_TOL = 1e-9      # raw input may drift this far from 1 and still be accepted
FEASIBILITY_TOL = 1e-9
RANK_TOL = 1e-8
SINGULAR_TOL = 1e-12


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Support:
    """Ordered, duplicate-free outcome labels shared by a problem instance."""

    labels: tuple[str, ...]

    def __post_init__(self):
        labels = tuple(str(x) for x in self.labels)
        object.__setattr__(self, "labels", labels)
        if len(labels) < 2:
            raise InputError("a support needs at least 2 outcomes")
        if len(set(labels)) != len(labels):
            raise InputError("support labels must be unique")

    @classmethod
    def range(cls, n: int) -> "Support":
        return cls(tuple(str(i) for i in range(n)))

    def __len__(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class Distribution:
    support: Support
    probs: np.ndarray
    renormalized: bool = False

    def __post_init__(self):
        object.__setattr__(self, "probs", _frozen(self.probs))


def _check_probs(raw, n: int) -> tuple[np.ndarray, bool]:
    p = np.asarray(raw, dtype=float)
    if p.ndim != 1 or p.shape[0] != n:
        raise LengthMismatchError(f"expected {n} probabilities, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise InputError("probabilities must be finite")
    if np.any(p < -NEG_TOL):
        raise NegativeMassError(f"negative probability {p.min():.3g}")
    p = np.where(p < 0, 0.0, p)
    total = p.sum()
    if abs(total - 1.0) > RENORM_TOL:
        raise BadTotalError(f"probabilities sum to {total!r}, not 1")
    renormalized = abs(total - 1.0) > SUM_TOL
    if renormalized:
        p = p / total
    return p, renormalized


def validate_distribution(raw: Sequence[float], support: Support) -> Distribution:
    """Build a ``Distribution`` from raw numbers.

    Drift from a total of 1 up to ``RENORM_TOL`` is renormalized away and
    flagged through ``Distribution.renormalized``; anything larger raises.
    """
    p, renormalized = _check_probs(raw, len(support))
    return Distribution(support, p, renormalized)


@dataclass(frozen=True)
class SourceDistributions:
    """``K`` observed distributions, one per variant, over one support."""

    variants: tuple[str, ...]
    support: Support
    probs: np.ndarray
    renormalized: tuple[bool, ...] = field(default=())

    def __post_init__(self):
        variants = tuple(str(v) for v in self.variants)
        object.__setattr__(self, "variants", variants)
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 2 or probs.shape[0] != len(variants):
            raise LengthMismatchError("need one probability row per variant")
        if len(variants) < 2:
            raise InputError("need at least 2 variants")
        if len(set(variants)) != len(variants):
            raise InputError("variant names must be unique")
        rows, flags = zip(*(_check_probs(r, len(self.support)) for r in probs))
        object.__setattr__(self, "probs", _frozen(np.vstack(rows)))
        if not self.renormalized:
            object.__setattr__(self, "renormalized", tuple(flags))

    @classmethod
    def from_rows(cls, rows, variants: Sequence[str] | None = None,
                  support: Support | None = None) -> "SourceDistributions":
        rows = np.asarray(rows, dtype=float)
        if variants is None:
            variants = [chr(ord("A") + i) if i < 26 else f"V{i}" for i in range(rows.shape[0])]
        if support is None:
            support = Support.range(rows.shape[1])
        return cls(tuple(variants), support, rows)

    @property
    def K(self) -> int:
        return self.probs.shape[0]

    @property
    def N(self) -> int:
        return self.probs.shape[1]

    @property
    def dists(self) -> tuple[Distribution, ...]:
        return tuple(Distribution(self.support, row) for row in self.probs)

    def reordered(self, order: Sequence[int]) -> "SourceDistributions":
        """Variants taken in the given order."""
        order = list(order)
        return SourceDistributions(tuple(self.variants[i] for i in order),
                                   self.support, self.probs[order])


@dataclass(frozen=True)
class MixtureMatrix:
    """Row-stochastic ``K x K`` matrix; ``entries[i, j] = P(Y=j | V=i)``."""

    entries: np.ndarray

    def __post_init__(self):
        P = np.asarray(self.entries, dtype=float)
        if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] < 2:
            raise InputError(f"mixture matrix must be square with K >= 2, got {P.shape}")
        if not np.all(np.isfinite(P)):
            raise InputError("mixture matrix entries must be finite")
        if np.any(P < -NEG_TOL):
            raise NegativeMassError(f"negative mixture coefficient {P.min():.3g}")
        if np.any(np.abs(P.sum(axis=1) - 1.0) > SUM_TOL):
            raise BadTotalError("mixture matrix rows must sum to 1")
        object.__setattr__(self, "entries", _frozen(P))

    @property
    def K(self) -> int:
        return self.entries.shape[0]

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.entries))

    @classmethod
    def identity(cls, K: int) -> "MixtureMatrix":
        return cls(np.eye(K))

    @classmethod
    def sanitized(cls, P, tol: float = FEASIBILITY_TOL) -> "MixtureMatrix":
        """Clip entries in ``[-tol, 0)`` to zero and renormalize rows."""
        P = np.array(P, dtype=float)
        if np.any(P < -tol):
            raise NegativeMassError(f"negative mixture coefficient {P.min():.3g}")
        P[P < 0] = 0.0
        P /= P.sum(axis=1, keepdims=True)
        return cls(P)


@dataclass(frozen=True)
class Decomposition:
    """A mixture matrix with its basis and diagnostics.

    ``feasibility_slack`` is the most negative basis component before
    clamping (0 or positive when nothing needed clamping).
    """

    support: Support
    matrix: MixtureMatrix
    basis: np.ndarray
    det_abs: float
    residual: float
    feasibility_slack: float

    def __post_init__(self):
        object.__setattr__(self, "basis", _frozen(self.basis))

    @property
    def P(self) -> np.ndarray:
        return self.matrix.entries

    @property
    def K(self) -> int:
        return self.matrix.K

    def basis_distributions(self) -> tuple[Distribution, ...]:
        return tuple(Distribution(self.support, row) for row in self.basis)


def _as_matrix(P) -> np.ndarray:
    return P.entries if isinstance(P, MixtureMatrix) else np.asarray(P, dtype=float)


def _source_array(src) -> np.ndarray:
    return src.probs if isinstance(src, SourceDistributions) else np.asarray(src, dtype=float)


def linear_independence_report(src: SourceDistributions, tol: float = RANK_TOL) -> dict:
    """Numerical rank of the stacked sources, thresholded relative to the top singular value."""
    s = np.linalg.svd(_source_array(src), compute_uv=False)
    rank = int(np.sum(s > tol * s[0])) if s[0] > 0 else 0
    return {"rank": rank, "independent": rank == src.K}


def basis_from_matrix(P, src) -> np.ndarray:
    """Solve ``P @ F = D`` for the basis ``F``. No sign checks are made here."""
    P = _as_matrix(P)
    if abs(np.linalg.det(P)) <= SINGULAR_TOL:
        raise SingularMatrixError("mixture matrix is (numerically) singular")
    return np.linalg.solve(P, _source_array(src))


def is_feasible(P, src, tol: float = FEASIBILITY_TOL) -> dict:
    F = basis_from_matrix(P, src)
    worst = float(F.min())
    return {"feasible": worst >= -tol, "worst_slack": worst}


def decompose(P, src: SourceDistributions, tol: float = FEASIBILITY_TOL) -> Decomposition:
    """Package ``P`` and its induced basis, clamping components in ``[-tol, 0)``.

    Raises ``InfeasibleMatrixError`` when some component is below ``-tol``.
    """
    M = P if isinstance(P, MixtureMatrix) else MixtureMatrix(P)
    F = basis_from_matrix(M, src)
    slack = float(F.min())
    if slack < -tol:
        raise InfeasibleMatrixError(f"basis component {slack:.3g} below -{tol:g}")
    F = np.where(F < 0, 0.0, F)
    residual = float(np.max(np.abs(M.entries @ F - src.probs)))
    return Decomposition(src.support, M, F, abs(M.det), residual, slack)


def trivial_decomposition(src: SourceDistributions) -> Decomposition:
    return Decomposition(src.support, MixtureMatrix.identity(src.K), src.probs,
                         1.0, 0.0, float(src.probs.min()))


def reconstruct(dec: Decomposition) -> np.ndarray:
    """``P @ F``: the ``K x N`` source array implied by a decomposition."""
    return dec.P @ dec.basis


def _check_perm(perm, K: int) -> list[int]:
    perm = [int(i) for i in perm]
    if sorted(perm) != list(range(K)):
        raise BadPermutationError(f"{perm} is not a permutation of 0..{K - 1}")
    return perm


def permutation_matrix(perm) -> np.ndarray:
    """``Q`` with ``Q[perm[j], j] = 1`` so that ``(P @ Q)[:, j] = P[:, perm[j]]``."""
    perm = _check_perm(perm, len(perm))
    Q = np.zeros((len(perm), len(perm)))
    Q[perm, np.arange(len(perm))] = 1.0
    return Q


def apply_permutation(dec: Decomposition, perm) -> Decomposition:
    """Relabel latent states: new state ``j`` is old state ``perm[j]``."""
    perm = _check_perm(perm, dec.K)
    P = dec.P[:, perm]
    return Decomposition(dec.support, MixtureMatrix(P), dec.basis[perm],
                         dec.det_abs, dec.residual, dec.feasibility_slack)


def _canonical_order(F: np.ndarray) -> list[int]:
    centers = F @ np.arange(F.shape[1], dtype=float)
    keys = [(centers[j], tuple(F[j])) for j in range(F.shape[0])]
    return sorted(range(F.shape[0]), key=keys.__getitem__)


def canonicalize(dec: Decomposition) -> Decomposition:
    """Order latent states by the expected support index of their basis distribution."""
    return apply_permutation(dec, _canonical_order(dec.basis))
