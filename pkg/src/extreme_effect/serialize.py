"""JSON interchange formats.

Distributions::

    {"support": [labels], "variants": [{"name": str, "probs": [numbers]}]}

Decompositions carry ``P``, ``basis``, ``det_abs``, ``residual`` and
``feasibility_slack``; producers add their own keys on top. Infinity is
written as the string ``"inf"``.
"""

from __future__ import annotations

import json
import math
from dataclasses import fields
from pathlib import Path

import jsonschema
import numpy as np

from .binary import BinarySolution
from .core import Decomposition, MixtureMatrix, SourceDistributions, Support
from .errors import InputError, SchemaError, SupportMismatchError
from .oracle import OracleResult
from .solver import SolverConfig, SolverResult

_EXT_NUMBER = {"oneOf": [{"type": "number"}, {"enum": ["inf"]}]}

DISTRIBUTIONS_SCHEMA = {
    "type": "object",
    "required": ["support", "variants"],
    "properties": {
        "support": {"type": "array", "minItems": 2,
                    "items": {"type": ["string", "number"]}},
        "variants": {
            "type": "array",
            "minItems": 2,
            "items": {
                "type": "object",
                "required": ["name", "probs"],
                "properties": {
                    "name": {"type": "string"},
                    "probs": {"type": "array", "items": {"type": "number"}},
                },
            },
        },
    },
}

_MATRIX = {"type": "array", "minItems": 2,
           "items": {"type": "array", "items": {"type": "number"}}}

DECOMPOSITION_SCHEMA = {
    "type": "object",
    "required": ["P", "basis", "det_abs", "residual", "feasibility_slack"],
    "properties": {
        "P": _MATRIX,
        "basis": _MATRIX,
        "det_abs": {"type": "number"},
        "residual": {"type": "number"},
        "feasibility_slack": {"type": "number"},
        "m": _EXT_NUMBER,
        "M": _EXT_NUMBER,
        "alpha": {"type": "number"},
        "beta": _EXT_NUMBER,
        "mirrored": {"type": "boolean"},
        "no_detectable_effect": {"type": "boolean"},
    },
}

SOLVER_CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {f.name: {"type": ["number", "integer", "boolean"]} for f in fields(SolverConfig)},
}


def _pointer(path) -> str:
    return "".join(f"/{p}" for p in path) or "/"


def validate(doc, schema) -> None:
    """Raise ``SchemaError`` at the JSON pointer of the first violation."""
    errors = sorted(jsonschema.Draft202012Validator(schema).iter_errors(doc),
                    key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise SchemaError(e.message, _pointer(e.absolute_path))


def ext_float(x: float):
    return "inf" if math.isinf(x) and x > 0 else float(x)


def parse_ext_float(x) -> float:
    return math.inf if x == "inf" else float(x)


def read_json(path):
    try:
        text = Path(path).read_text() if str(path) != "-" else __import__("sys").stdin.read()
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc.msg} (line {exc.lineno})", "") from None
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def dump_json(doc, fh=None) -> str:
    text = json.dumps(doc, indent=2, allow_nan=False)
    if fh is not None:
        fh.write(text + "\n")
    return text


# distributions

def distributions_to_json(src: SourceDistributions) -> dict:
    return {
        "support": list(src.support.labels),
        "variants": [{"name": v, "probs": [float(p) for p in row]}
                     for v, row in zip(src.variants, src.probs)],
    }


def distributions_from_json(doc) -> SourceDistributions:
    validate(doc, DISTRIBUTIONS_SCHEMA)
    support = Support(tuple(str(s) for s in doc["support"]))
    variants = doc["variants"]
    for i, v in enumerate(variants):
        if len(v["probs"]) != len(support):
            raise SchemaError(f"expected {len(support)} probabilities, got {len(v['probs'])}",
                              f"/variants/{i}/probs")
    return SourceDistributions(tuple(v["name"] for v in variants), support,
                               np.array([v["probs"] for v in variants], dtype=float))


# decompositions

def decomposition_to_json(dec: Decomposition) -> dict:
    return {
        "P": dec.P.tolist(),
        "basis": dec.basis.tolist(),
        "det_abs": float(dec.det_abs),
        "residual": float(dec.residual),
        "feasibility_slack": float(dec.feasibility_slack),
    }


def binary_fields(sol: BinarySolution) -> dict:
    out = {"mirrored": bool(sol.mirrored), "no_detectable_effect": bool(sol.no_detectable_effect),
           "alpha": float(sol.alpha), "beta": ext_float(sol.beta)}
    if sol.bounds is not None:
        out["m"] = ext_float(sol.bounds.m)
        out["M"] = ext_float(sol.bounds.M)
    return out


def solver_result_to_json(res: SolverResult) -> dict:
    doc = decomposition_to_json(res.decomposition)
    doc.update(objective=float(res.objective), branch_note=res.branch_note,
               starts_converged=int(res.starts_converged),
               no_detectable_effect=bool(res.no_detectable_effect))
    if res.binary is not None:
        doc.update(binary_fields(res.binary))
    return doc


def oracle_result_to_json(res: OracleResult, src: SourceDistributions) -> dict:
    from .core import decompose
    dec = decompose(res.matrix, src, 1.0)  # grid points are feasible within the grid tolerance
    doc = decomposition_to_json(dec)
    doc.update(objective=float(res.objective), method="grid",
               candidates=int(res.candidates), feasible=int(res.feasible))
    return doc


def decomposition_from_json(doc, support: Support) -> Decomposition:
    validate(doc, DECOMPOSITION_SCHEMA)
    P = np.array(doc["P"], dtype=float)
    F = np.array(doc["basis"], dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise SchemaError("P must be square", "/P")
    if F.ndim != 2 or F.shape[0] != P.shape[0]:
        raise SchemaError("basis needs one row per latent state", "/basis")
    if F.shape[1] != len(support):
        raise SupportMismatchError(f"basis has {F.shape[1]} outcomes, support has {len(support)}")
    return Decomposition(support, MixtureMatrix(P), F, float(doc["det_abs"]),
                         float(doc["residual"]), float(doc["feasibility_slack"]))


def solver_config_from_json(doc, base: SolverConfig | None = None) -> SolverConfig:
    validate(doc, SOLVER_CONFIG_SCHEMA)
    from dataclasses import replace
    return replace(base or SolverConfig(), **doc)
