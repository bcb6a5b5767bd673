"""Planted instances and simulated experiment logs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import MixtureMatrix, SourceDistributions, Support
from .errors import InputError, RejectionExhaustedError
from .ingest import ObservationRecord

MAX_DRAWS = 1000
MIN_BASIS_TV = 0.2


@dataclass(frozen=True)
class PlantSpec:
    K: int
    N: int
    seed: int = 0
    min_det: float = 0.05
    basis_concentration: float = 0.5

    def __post_init__(self):
        if not self.N >= self.K >= 2:
            raise InputError("need N >= K >= 2")
        if not 0 < self.min_det <= 1:
            raise InputError("min_det must lie in (0, 1]")
        if not self.basis_concentration > 0:
            raise InputError("basis_concentration must be positive")


@dataclass(frozen=True)
class PlantedInstance:
    P_star: MixtureMatrix
    f_star: np.ndarray
    src: SourceDistributions


def planted_source(P_star, f_star, variants=None, support: Support | None = None) -> SourceDistributions:
    """Sources ``P_star @ f_star``; rows are convex combinations so they are valid."""
    P = P_star.entries if isinstance(P_star, MixtureMatrix) else np.asarray(P_star, dtype=float)
    D = P @ np.asarray(f_star, dtype=float)
    return SourceDistributions.from_rows(D / D.sum(axis=1, keepdims=True), variants, support)


def _draw_basis(spec: PlantSpec, rng: np.random.Generator) -> np.ndarray:
    alpha = np.full(spec.N, spec.basis_concentration)
    for _ in range(MAX_DRAWS):
        F = rng.dirichlet(alpha, size=spec.K)
        tv = 0.5 * np.abs(F[:, None, :] - F[None, :, :]).sum(axis=-1)
        if tv[np.triu_indices(spec.K, 1)].min() >= MIN_BASIS_TV:
            return F
    raise RejectionExhaustedError("could not draw a well-separated basis")


def plant(spec: PlantSpec) -> PlantedInstance:
    rng = np.random.default_rng(spec.seed)
    F = _draw_basis(spec, rng)
    for _ in range(MAX_DRAWS):
        P = rng.dirichlet(np.ones(spec.K), size=spec.K)
        if abs(np.linalg.det(P)) >= spec.min_det:
            break
    else:
        raise RejectionExhaustedError(f"no mixture matrix with |det| >= {spec.min_det} "
                                      f"in {MAX_DRAWS} draws")
    P_star = MixtureMatrix.sanitized(P)
    return PlantedInstance(P_star, F, planted_source(P_star, F))


def _label_value(label: str, index: int) -> float:
    try:
        return float(label)
    except ValueError:
        return float(index)


def sample_observations(src: SourceDistributions, n_per_variant: int, seed: int = 0,
                        ) -> list[ObservationRecord]:
    """I.i.d. draws per variant; the metric value is the numeric support label (or its index)."""
    if n_per_variant < 1:
        raise InputError("n_per_variant must be >= 1")
    rng = np.random.default_rng(seed)
    values = [_label_value(lab, i) for i, lab in enumerate(src.support.labels)]
    records = []
    uid = 0
    for v, probs in zip(src.variants, src.probs):
        draws = rng.choice(len(values), size=n_per_variant, p=probs)
        for x in draws:
            records.append(ObservationRecord(f"u{uid}", v, values[x]))
            uid += 1
    return records
