"""Per-unit logs to binned per-variant distributions.

Binning happens on (optionally ``log1p``-transformed) values; the per-variant
means are always taken on the raw values.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .core import SourceDistributions, Support
from .errors import (
    DegenerateBinsError,
    DuplicateAssignmentError,
    EmptyDatasetError,
    EmptyVariantError,
    InputError,
    ParseError,
    UnknownHeaderError,
)

HEADER = ("unit_id", "variant", "value")
TRANSFORMS = ("none", "log1p")
STRATEGIES = ("fixed_width", "quantile")
REFERENCES = ("pooled", "control")


@dataclass(frozen=True)
class ObservationRecord:
    unit_id: str
    variant: str
    value: float


@dataclass(frozen=True)
class BinningConfig:
    transform: str = "log1p"
    n_bins: int = 64
    strategy: str = "quantile"
    quantile_reference: str = "pooled"
    drop_empty_shared_bins: bool = True

    def __post_init__(self):
        if self.n_bins < 2:
            raise InputError("n_bins must be >= 2")
        if self.transform not in TRANSFORMS:
            raise InputError(f"transform must be one of {TRANSFORMS}")
        if self.strategy not in STRATEGIES:
            raise InputError(f"strategy must be one of {STRATEGIES}")
        if self.quantile_reference not in REFERENCES:
            raise InputError(f"quantile_reference must be one of {REFERENCES}")


@dataclass(frozen=True)
class EmpiricalResult:
    src: SourceDistributions
    means: dict[str, float]
    counts: dict[str, int]
    edges: np.ndarray
    config: BinningConfig
    bin_counts: np.ndarray = field(repr=False, default=None)

    def binning_json(self) -> dict:
        return {
            "transform": self.config.transform,
            "n_bins": self.config.n_bins,
            "strategy": self.config.strategy,
            "quantile_reference": self.config.quantile_reference,
            "drop_empty_shared_bins": self.config.drop_empty_shared_bins,
            "edges": [float(e) for e in self.edges],
        }


def load_csv(path) -> list[ObservationRecord]:
    with open(Path(path), newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyDatasetError(f"{path}: empty file") from None
        if tuple(h.strip() for h in header) != HEADER:
            raise UnknownHeaderError(f"{path}: expected header {','.join(HEADER)}, got {','.join(header)}")
        records = []
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise ParseError(f"expected 3 fields, got {len(row)}", line)
            uid, variant, raw = (c.strip() for c in row)
            try:
                value = float(raw)
            except ValueError:
                raise ParseError(f"value {raw!r} is not a number", line) from None
            if not math.isfinite(value) or value < 0:
                raise ParseError(f"value {raw!r} must be finite and non-negative", line)
            records.append(ObservationRecord(uid, variant, value))
    if not records:
        raise EmptyDatasetError(f"{path}: no records")
    return records


def write_csv(records: Iterable[ObservationRecord], path) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(HEADER)
        for r in records:
            w.writerow((r.unit_id, r.variant, repr(float(r.value))))


def _group(records: Sequence[ObservationRecord]) -> dict[str, np.ndarray]:
    groups: dict[str, list[float]] = {}
    owner: dict[str, str] = {}
    for r in records:
        prev = owner.setdefault(r.unit_id, r.variant)
        if prev != r.variant:
            raise DuplicateAssignmentError(f"unit {r.unit_id!r} appears in variants {prev!r} and {r.variant!r}")
        groups.setdefault(r.variant, []).append(r.value)
    return {v: np.asarray(x, dtype=float) for v, x in groups.items()}


def _bin_edges(ref: np.ndarray, cfg: BinningConfig) -> np.ndarray:
    lo, hi = float(ref.min()), float(ref.max())
    if hi <= lo:
        raise DegenerateBinsError("all reference values are identical")
    if cfg.strategy == "fixed_width":
        return np.linspace(lo, hi, cfg.n_bins + 1)
    distinct = np.unique(ref)
    if len(distinct) <= cfg.n_bins:
        # few distinct values: one bin per value, edges at the midpoints
        return np.concatenate([[lo], (distinct[:-1] + distinct[1:]) / 2, [hi]])
    edges = np.unique(np.quantile(ref, np.linspace(0.0, 1.0, cfg.n_bins + 1)))
    if len(edges) < 3:
        raise DegenerateBinsError("quantile edges collapse to fewer than 2 bins")
    return edges


def _label(lo: float, hi: float, last: bool) -> str:
    return f"[{lo:.6g}, {hi:.6g}{']' if last else ')'}"


def empirical_distributions(records: Sequence[ObservationRecord],
                            cfg: BinningConfig | None = None) -> EmpiricalResult:
    """Histogram every variant on one shared set of bins."""
    cfg = cfg or BinningConfig()
    if not records:
        raise EmptyDatasetError("no records")
    groups = _group(records)
    if len(groups) < 2:
        raise EmptyVariantError(f"need at least 2 variants, found {list(groups)}")
    variants = list(groups)
    raw = [groups[v] for v in variants]
    tx = [np.log1p(x) if cfg.transform == "log1p" else x for x in raw]
    ref = np.concatenate(tx) if cfg.quantile_reference == "pooled" else tx[0]
    edges = _bin_edges(ref, cfg)
    n_bins = len(edges) - 1
    # bins are [e_k, e_k+1) with the last one closed; out-of-range values go to the end bins
    counts = np.vstack([
        np.bincount(np.clip(np.searchsorted(edges, x, side="right") - 1, 0, n_bins - 1),
                    minlength=n_bins)
        for x in tx
    ])
    labels = [_label(edges[k], edges[k + 1], k == n_bins - 1) for k in range(n_bins)]
    keep = np.ones(n_bins, dtype=bool)
    if cfg.drop_empty_shared_bins:
        keep = counts.sum(axis=0) > 0
    counts = counts[:, keep]
    labels = [lab for lab, k in zip(labels, keep) if k]
    if len(labels) < 2:
        raise DegenerateBinsError("fewer than 2 non-empty bins")
    if len(set(labels)) != len(labels):
        labels = [f"{k}:{lab}" for k, lab in enumerate(labels)]
    probs = counts / counts.sum(axis=1, keepdims=True)
    src = SourceDistributions(tuple(variants), Support(tuple(labels)), probs)
    return EmpiricalResult(
        src=src,
        means={v: float(np.mean(x)) for v, x in zip(variants, raw)},
        counts={v: int(len(x)) for v, x in zip(variants, raw)},
        edges=edges,
        config=cfg,
        bin_counts=counts,
    )
