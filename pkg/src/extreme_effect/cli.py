"""Command-line interface.

Subcommands: ``analyze`` (raw CSV to A/B report), ``decompose``, ``oracle``,
``synth`` and ``plotdata``. JSON goes to stdout (or ``--out``); a short
human-readable summary goes to stderr.

Exit codes: 0 solved, 3 degenerate or no detectable effect, 2 input error,
1 internal error.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from dataclasses import dataclass, field, replace

import numpy as np

from . import serialize as ser
from .binary import solve_binary
from .core import Decomposition, SourceDistributions
from .errors import EffectError, EmptyVariantError, InputError, SupportMismatchError
from .ingest import BinningConfig, EmpiricalResult, empirical_distributions, load_csv, write_csv
from .oracle import GridSpec, brute_force_min_det
from .solver import SolverConfig, SolverResult, solve_extreme, verify_solution
from .synth import PlantSpec, plant, sample_observations

EXIT_OK, EXIT_INTERNAL, EXIT_INPUT, EXIT_DEGENERATE = 0, 1, 2, 3

# A/A runs (20 seeds; continuous, count and two-valued metrics; n = 1e3..1e5 per
# arm) never pushed the noise ratio above 1.76; see scripts/calibrate_no_effect.py.
NO_EFFECT_THRESHOLD = 3.0


def noise_ratio(er: EmpiricalResult, i: int = 0, j: int = 1) -> float:
    """Total-variation distance between two arms over its expected A/A value.

    Under identical arms ``|a_x - b_x|`` is roughly normal with variance
    ``p_x (1/n_a + 1/n_b)``, so ``E[TV] ~ sqrt(2/pi)/2 * sum_x sqrt(p_x (1/n_a + 1/n_b))``.
    """
    c = er.bin_counts[[i, j]].astype(float)
    n_a, n_b = c.sum(axis=1)
    pooled = c.sum(axis=0) / c.sum()
    tv = 0.5 * np.abs(er.src.probs[i] - er.src.probs[j]).sum()
    scale = math.sqrt(2 / math.pi) / 2 * np.sqrt(pooled * (1 / n_a + 1 / n_b)).sum()
    return float(tv / scale) if scale > 0 else math.inf


@dataclass(frozen=True)
class ABReport:
    mu_A: float
    mu_B: float
    delta: float
    rel_delta: float | None
    alpha: float | None
    beta: float | None
    decomposition: Decomposition
    flags: dict = field(default_factory=dict)
    variants: tuple[str, ...] = ()
    means: dict = field(default_factory=dict)
    counts: dict = field(default_factory=dict)
    noise_ratio: float = math.nan
    effect_threshold: float = NO_EFFECT_THRESHOLD
    solver: SolverResult | None = None
    binning: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        doc = {
            "variants": list(self.variants),
            "mu_A": self.mu_A,
            "mu_B": self.mu_B,
            "delta": self.delta,
            "rel_delta": self.rel_delta,
            "alpha": self.alpha,
            "beta": None if self.beta is None else ser.ext_float(self.beta),
            "flags": dict(self.flags),
            "noise_ratio": ser.ext_float(self.noise_ratio),
            "effect_threshold": self.effect_threshold,
            "means": dict(self.means),
            "counts": dict(self.counts),
            "binning": self.binning,
            "decomposition": (ser.solver_result_to_json(self.solver) if self.solver is not None
                              else ser.decomposition_to_json(self.decomposition)),
        }
        return doc


def analyze(er: EmpiricalResult, cfg: SolverConfig | None = None,
            effect_threshold: float = NO_EFFECT_THRESHOLD) -> ABReport:
    """A/B report for binned data; the first variant is the control ``A``."""
    cfg = cfg or SolverConfig()
    src = er.src
    a, b = src.variants[0], src.variants[1]
    res = solve_extreme(src, cfg)
    ratio = noise_ratio(er)
    alpha = beta = None
    mirrored = False
    if src.K == 2:
        sol = res.binary if res.binary is not None else solve_binary(
            src.probs[0], src.probs[1], cfg.feasibility_tol, src.variants, src.support)
        alpha, beta, mirrored = sol.alpha, sol.beta, sol.mirrored
    no_effect = bool(res.no_detectable_effect or ratio <= effect_threshold)
    delta = er.means[b] - er.means[a]
    return ABReport(
        mu_A=er.means[a], mu_B=er.means[b], delta=delta,
        rel_delta=delta / er.means[a] if er.means[a] != 0 else None,
        alpha=alpha, beta=beta, decomposition=res.decomposition,
        flags={"mirrored": bool(mirrored), "no_detectable_effect": no_effect,
               "degenerate": bool(res.no_detectable_effect)},
        variants=src.variants, means=dict(er.means), counts=dict(er.counts),
        noise_ratio=ratio, effect_threshold=effect_threshold, solver=res,
        binning=er.binning_json(),
    )


def plot_rows(dec: Decomposition, src: SourceDistributions) -> list[tuple[str, str, float]]:
    """Tidy ``(bin, series, probability)`` rows: every source, then every basis state."""
    if dec.basis.shape[1] != src.N or dec.support.labels != src.support.labels:
        raise SupportMismatchError("decomposition and sources use different supports")
    if dec.K != src.K:
        raise SupportMismatchError(f"decomposition has {dec.K} states, sources have {src.K} variants")
    series = [(f"d_{v}", row) for v, row in zip(src.variants, src.probs)]
    series += [(f"f_{j}", row) for j, row in enumerate(dec.basis)]
    return [(lab, name, float(p)) for name, row in series for lab, p in zip(src.support.labels, row)]


# argument handling

def _solver_config(args) -> SolverConfig:
    cfg = SolverConfig()
    if getattr(args, "config", None):
        cfg = ser.solver_config_from_json(ser.read_json(args.config), cfg)
    over = {k: v for k, v in (("seed", args.seed), ("starts", args.starts),
                              ("feasibility_tol", args.feasibility_tol),
                              ("max_iters", args.max_iters)) if v is not None}
    return replace(cfg, **over)


def _add_solver_flags(p):
    p.add_argument("--starts", type=int, help="random restarts of the local search")
    p.add_argument("--feasibility-tol", type=float, help="tolerance on negative basis mass")
    p.add_argument("--max-iters", type=int, help="iteration cap per restart")
    p.add_argument("--config", help="solver configuration as a JSON object")


def _add_common(p, formats=("json", "csv")):
    p.add_argument("--seed", type=int, default=None, help="random seed (default 0)")
    p.add_argument("--out", help="write output here instead of stdout")
    p.add_argument("--format", choices=formats, default=formats[0])


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="extreme-effect",
                                 description="Extreme decompositions of experiment-variant distributions.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="A/B report from a unit_id,variant,value CSV")
    p.add_argument("csv_path")
    p.add_argument("--transform", choices=["none", "log1p"], default="log1p")
    p.add_argument("--n-bins", type=int, default=64)
    p.add_argument("--strategy", choices=["fixed_width", "quantile"], default="quantile")
    p.add_argument("--quantile-reference", choices=["pooled", "control"], default="pooled")
    p.add_argument("--keep-empty-bins", action="store_true", help="keep bins empty in every variant")
    p.add_argument("--control", help="variant to treat as A (default: first seen)")
    p.add_argument("--effect-threshold", type=float, default=NO_EFFECT_THRESHOLD,
                   help="noise ratio at or below which no effect is reported")
    _add_solver_flags(p)
    _add_common(p)

    p = sub.add_parser("decompose", help="extreme decomposition of a distributions JSON")
    p.add_argument("json_path")
    _add_solver_flags(p)
    _add_common(p)

    p = sub.add_parser("oracle", help="exhaustive grid reference for small problems")
    p.add_argument("json_path")
    p.add_argument("--steps", type=int, required=True)
    _add_common(p)

    p = sub.add_parser("synth", help="planted instance (distributions JSON) and optional observations")
    p.add_argument("--K", type=int, default=2)
    p.add_argument("--N", type=int, default=8)
    p.add_argument("--min-det", type=float, default=0.05)
    p.add_argument("--concentration", type=float, default=0.5)
    p.add_argument("--n-per-variant", type=int, help="also sample this many observations per variant")
    p.add_argument("--observations", help="CSV path for the sampled observations")
    _add_common(p)

    p = sub.add_parser("plotdata", help="tidy bin,series,probability CSV for plotting")
    p.add_argument("decomposition_json")
    p.add_argument("source_json")
    _add_common(p, formats=("csv",))
    return ap


def _matrix_csv(dec: Decomposition) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(("table", "row", "col", "value"))
    for name, A, cols in (("P", dec.P, range(dec.K)), ("basis", dec.basis, dec.support.labels)):
        for i, row in enumerate(A):
            for c, x in zip(cols, row):
                w.writerow((name, i, c, repr(float(x))))
    return buf.getvalue()


def _emit(args, doc=None, text=None):
    if text is None:
        text = ser.dump_json(doc) + "\n"
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _say(msg: str):
    print(msg, file=sys.stderr)


def cmd_analyze(args) -> int:
    cfg = BinningConfig(transform=args.transform, n_bins=args.n_bins, strategy=args.strategy,
                        quantile_reference=args.quantile_reference,
                        drop_empty_shared_bins=not args.keep_empty_bins)
    records = load_csv(args.csv_path)
    if args.control is not None:
        if args.control not in {r.variant for r in records}:
            raise EmptyVariantError(f"control variant {args.control!r} has no records")
        records = sorted(records, key=lambda r: r.variant != args.control)
    er = empirical_distributions(records, cfg)
    rep = analyze(er, _solver_config(args), args.effect_threshold)
    if args.format == "csv":
        _emit(args, text=_matrix_csv(rep.decomposition))
    else:
        _emit(args, rep.to_json())
    a, b = rep.variants[:2]
    _say(f"{a}: mean {rep.mu_A:.6g} (n={rep.counts[a]})  {b}: mean {rep.mu_B:.6g} (n={rep.counts[b]})")
    if rep.alpha is not None:
        _say(f"delta {rep.delta:.6g}  alpha {rep.alpha:.4f}  beta {rep.beta:.4f}  "
             f"noise ratio {rep.noise_ratio:.2f}")
    if rep.flags["no_detectable_effect"]:
        _say("no detectable effect")
        return EXIT_DEGENERATE
    return EXIT_OK


def cmd_decompose(args) -> int:
    src = ser.distributions_from_json(ser.read_json(args.json_path))
    cfg = _solver_config(args)
    res = solve_extreme(src, cfg)
    doc = ser.solver_result_to_json(res)
    doc["verification"] = verify_solution(res, src, cfg)
    if args.format == "csv":
        _emit(args, text=_matrix_csv(res.decomposition))
    else:
        _emit(args, doc)
    _say(f"K={src.K} N={src.N} branch={res.branch_note} |det P|={res.objective:.6g} "
         f"residual={res.decomposition.residual:.2g}")
    return EXIT_DEGENERATE if res.no_detectable_effect else EXIT_OK


def cmd_oracle(args) -> int:
    src = ser.distributions_from_json(ser.read_json(args.json_path))
    res = brute_force_min_det(src, GridSpec(args.steps))
    doc = ser.oracle_result_to_json(res, src)
    if args.format == "csv":
        from .core import decompose
        _emit(args, text=_matrix_csv(decompose(res.matrix, src, 1.0)))
    else:
        _emit(args, doc)
    _say(f"grid steps={args.steps} candidates={res.candidates} feasible={res.feasible} "
         f"|det P|={res.objective:.6g}")
    return EXIT_OK


def cmd_synth(args) -> int:
    inst = plant(PlantSpec(args.K, args.N, seed=args.seed or 0, min_det=args.min_det,
                           basis_concentration=args.concentration))
    records = None
    if args.n_per_variant is not None:
        records = sample_observations(inst.src, args.n_per_variant, seed=args.seed or 0)
        if args.observations:
            write_csv(records, args.observations)
    elif args.observations or args.format == "csv":
        raise InputError("--observations and --format csv need --n-per-variant")
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(("unit_id", "variant", "value"))
        w.writerows((r.unit_id, r.variant, repr(r.value)) for r in records)
        _emit(args, text=buf.getvalue())
    else:
        doc = ser.distributions_to_json(inst.src)
        doc["planted"] = {"P": inst.P_star.entries.tolist(), "basis": inst.f_star.tolist(),
                          "det_abs": abs(inst.P_star.det)}
        _emit(args, doc)
    _say(f"planted K={args.K} N={args.N} |det P*|={abs(inst.P_star.det):.6g}")
    return EXIT_OK


def cmd_plotdata(args) -> int:
    src = ser.distributions_from_json(ser.read_json(args.source_json))
    dec_doc = ser.read_json(args.decomposition_json)
    if isinstance(dec_doc, dict) and "decomposition" in dec_doc:
        dec_doc = dec_doc["decomposition"]  # an analyze report
    dec = ser.decomposition_from_json(dec_doc, src.support)
    rows = plot_rows(dec, src)
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(("bin", "series", "probability"))
    w.writerows((b, s, repr(p)) for b, s, p in rows)
    _emit(args, text=buf.getvalue())
    _say(f"{len(rows)} rows, {len(rows) // src.N} series")
    return EXIT_OK


COMMANDS = {"analyze": cmd_analyze, "decompose": cmd_decompose, "oracle": cmd_oracle,
            "synth": cmd_synth, "plotdata": cmd_plotdata}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except InputError as exc:
        _say(f"error: {exc}")
        return EXIT_INPUT
    except EffectError as exc:
        _say(f"error: {type(exc).__name__}: {exc}")
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001
        _say(f"internal error: {type(exc).__name__}: {exc}")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
