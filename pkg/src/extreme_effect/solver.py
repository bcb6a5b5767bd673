"""Minimum-|det| feasible mixture matrix for general K.

The search runs in the coordinates ``C = P^-1``. Row ``c_j`` of ``C``
generates basis distribution ``f_j = c_j @ D`` and rows of ``C`` sum to one
because ``P`` is row-stochastic. With every row but ``c_j`` held fixed and
the sign ``s`` of ``det C`` frozen,

* ``f_j >= 0`` is linear in ``c_j``;
* ``P[i, k] * det C = det(C with row k := e_i)`` is linear in ``c_j`` for
  ``k != j`` and independent of it for ``k == j`` (Cramer's rule), so
  ``P >= 0`` is linear in ``c_j`` too;
* ``det C`` is linear in ``c_j`` (Laplace expansion).

Minimizing ``|det P| = 1 / |det C|`` over one row is therefore a small LP, so
each move is an exact block-coordinate step. Moves are backtracked
(``step_shrink``) until the sanitized iterate passes the feasibility check
and strictly improves, which keeps every accepted iterate feasible and the
objective monotone.

Starts come from two sources: simplices on vertices of the polytope
``{c : c @ D >= 0, sum(c) = 1}`` that contain every source (tried first), and
random perturbations of the ``K!`` permutation matrices. Row sweeps alone
can zigzag for ``K >= 3``, so slow sweeps are followed by a linearized move
of all rows together, and starts that stall above the incumbent are dropped.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import linprog

from . import binary
from .core import (
    FEASIBILITY_TOL,
    SINGULAR_TOL,
    Decomposition,
    MixtureMatrix,
    SourceDistributions,
    basis_from_matrix,
    canonicalize,
    decompose,
    linear_independence_report,
    trivial_decomposition,
)
from .errors import EmptySupportError, InfeasibleMatrixError, InputError, NegativeMassError, SingularDError

_LP_OPTIONS = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}

_ENUMERATION_CAP = 4000
_SUBSET_CAP = 200_000
_JOINT_TRIES = 8
_JOINT_TRIGGER = 1e-2
_STALL_WINDOW = 50
_STALL_GAIN = 1e-2

GENERAL = "general"
BINARY = "binary"
SQUARE = "square-support"
DEGENERATE = "degenerate"


@dataclass(frozen=True)
class SolverConfig:
    feasibility_tol: float = FEASIBILITY_TOL
    starts: int = 16
    max_iters: int = 2000
    step_init: float = 0.1
    step_shrink: float = 0.5
    min_step: float = 1e-7
    seed: int = 0
    det_tol: float = SINGULAR_TOL
    rank_tol: float = 1e-8
    reconstruction_tol: float = 1e-8
    vertex_seeds: int = 8
    use_shortcuts: bool = True

    def __post_init__(self):
        for name in ("feasibility_tol", "step_init", "min_step", "det_tol", "rank_tol",
                     "reconstruction_tol"):
            if not getattr(self, name) > 0:
                raise InputError(f"{name} must be positive")
        if not 0 < self.step_shrink < 1:
            raise InputError("step_shrink must lie in (0, 1)")
        if self.starts < 1 or self.max_iters < 1:
            raise InputError("starts and max_iters must be >= 1")
        if self.seed < 0:
            raise InputError("seed must be non-negative")


@dataclass(frozen=True)
class SolverResult:
    decomposition: Decomposition
    objective: float
    branch_note: str
    starts_converged: int = 0
    best_start_index: int = -1
    no_detectable_effect: bool = False
    binary: binary.BinarySolution | None = None
    histories: tuple[tuple[float, ...], ...] = field(default=(), repr=False)


def objective(P) -> float:
    """``|det P|`` via LU with partial pivoting."""
    P = P.entries if isinstance(P, MixtureMatrix) else np.asarray(P, dtype=float)
    return float(abs(np.linalg.det(P)))


def _cofactor_rows(A: np.ndarray, j: int) -> np.ndarray:
    """Cofactors along row ``j`` for a stack of ``K x K`` matrices.

    ``det(A with row j := c) == _cofactor_rows(A, j) @ c``.
    """
    A = np.asarray(A, dtype=float)
    K = A.shape[-1]
    if K == 1:
        return np.ones(A.shape[:-2] + (1,))
    rows = [r for r in range(K) if r != j]
    keep = np.array([[c for c in range(K) if c != l] for l in range(K)])
    minors = np.moveaxis(A[..., rows, :][..., keep], -2, -3)
    signs = (-1.0) ** (j + np.arange(K))
    return signs * np.linalg.det(minors)


def _row_program(C: np.ndarray, D: np.ndarray, j: int):
    """Objective vector and constraint rows ``G @ c >= 0`` for moving row ``j``."""
    K = C.shape[0]
    s = math.copysign(1.0, np.linalg.det(C))
    obj = s * _cofactor_rows(C, j)
    others = [k for k in range(K) if k != j]
    k_idx = np.repeat(others, K)
    i_idx = np.tile(np.arange(K), K - 1)
    A = np.repeat(C[None], len(k_idx), axis=0)
    A[np.arange(len(k_idx)), k_idx] = np.eye(K)[i_idx]
    G_p = s * _cofactor_rows(A, j)
    G = np.vstack([D.T, G_p])
    scale = np.max(np.abs(G), axis=1)
    keep = scale > 1e-300
    return obj, G[keep] / scale[keep, None]


def _polytope_vertices(G: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Vertices of ``{c : G c >= 0, sum(c) = 1}`` (rows of ``G`` normalized)."""
    m, K = G.shape
    combos = np.array(list(itertools.combinations(range(m), K - 1)), dtype=np.intp)
    if len(combos) == 0:
        return np.empty((0, K))
    A = np.concatenate([G[combos], np.ones((len(combos), 1, K))], axis=1)
    ok = np.abs(np.linalg.det(A)) > 1e-12
    rhs = np.zeros(K)
    rhs[-1] = 1.0
    X = np.linalg.solve(A[ok], rhs)
    return X[(X @ G.T).min(axis=1) >= -tol]


def _solve_row_lp(obj: np.ndarray, G: np.ndarray, c0: np.ndarray) -> np.ndarray | None:
    """Maximize ``obj @ c`` over ``{G c >= 0, sum(c) = 1}``.

    Small programs are solved exactly by vertex enumeration, larger ones by HiGHS.
    """
    K = obj.shape[0]
    if K == 2:
        # one free direction u = (1, -1); c = c0 + t u
        u = np.array([1.0, -1.0])
        gu, g0 = G @ u, G @ c0
        with np.errstate(divide="ignore", invalid="ignore"):
            bound = -g0 / gu
        hi = np.min(bound[gu < 0], initial=np.inf)
        lo = np.max(bound[gu > 0], initial=-np.inf)
        t = hi if obj @ u > 0 else lo
        if not np.isfinite(t):
            return None
        return c0 + t * u
    if math.comb(G.shape[0], K - 1) <= _ENUMERATION_CAP:
        V = _polytope_vertices(G)
        if len(V) == 0:
            return None
        return V[np.argmax(V @ obj)]
    res = linprog(-obj, A_ub=-G, b_ub=np.zeros(G.shape[0]),
                  A_eq=np.ones((1, K)), b_eq=[1.0], bounds=[(None, None)] * K,
                  method="highs", options=_LP_OPTIONS)
    if res.status != 0:
        return None
    return res.x


def _vertex_seeds(D: np.ndarray, count: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Feasible mixture matrices whose basis sits on vertices of the outcome polytope.

    The outcome polytope is the set of distributions in the affine hull of
    the sources. Simplices on its vertices are ranked by volume and kept
    when they contain every source.
    """
    K = D.shape[0]
    if count <= 0:
        return []
    G = D.T / np.max(np.abs(D.T), axis=1, keepdims=True).clip(1e-300)
    if math.comb(G.shape[0], K - 1) > 50 * _ENUMERATION_CAP:
        return []
    V = _polytope_vertices(G)
    # merge vertices that coincide numerically
    V = V[np.unique(np.round(V @ D, 9), axis=0, return_index=True)[1]]
    if len(V) < K:
        return []
    n_sub = math.comb(len(V), K)
    if n_sub <= _SUBSET_CAP:
        subsets = np.array(list(itertools.combinations(range(len(V)), K)), dtype=np.intp)
    else:
        subsets = np.array([rng.choice(len(V), K, replace=False) for _ in range(_SUBSET_CAP)])
    vol = np.abs(np.linalg.det(V[subsets]))
    order = np.argsort(-vol, kind="stable")
    seeds: list[np.ndarray] = []
    for idx in order:
        if vol[idx] <= 1.0 or len(seeds) >= count:
            break
        P = np.linalg.inv(V[subsets[idx]])
        if P.min() >= -1e-9:
            seeds.append(P)
    return seeds


def _accept(C: np.ndarray, D: np.ndarray, cfg: SolverConfig):
    """Sanitize ``C^-1`` into a stochastic matrix; return (P, |det P|) if feasible."""
    try:
        P = np.linalg.inv(C)
        M = MixtureMatrix.sanitized(P, cfg.feasibility_tol)
    except (np.linalg.LinAlgError, NegativeMassError, ValueError):
        return None
    det = objective(M)
    if not det > cfg.det_tol:
        return None
    F = np.linalg.solve(M.entries, D)
    if F.min() < -cfg.feasibility_tol:
        return None
    return M.entries, det


def _initial_matrix(K: int, perm, rng: np.random.Generator, D: np.ndarray,
                    cfg: SolverConfig) -> tuple[np.ndarray, float]:
    """A random feasible perturbation of the permutation matrix for ``perm``."""
    Q = np.zeros((K, K))
    Q[np.arange(K), perm] = 1.0
    R = rng.dirichlet(np.ones(K), size=K)
    eps = cfg.step_init * rng.uniform(0.5, 1.0)
    while eps >= cfg.min_step:
        cand = _accept(np.linalg.inv((1 - eps) * Q + eps * R), D, cfg)
        if cand is not None:
            return cand
        eps *= cfg.step_shrink
    return Q, 1.0


def _cofactor_matrix(A: np.ndarray) -> np.ndarray:
    """Full cofactor matrix, so that the gradient of ``det`` at ``A`` is ``cof(A)``."""
    return np.stack([_cofactor_rows(A, j) for j in range(A.shape[-1])], axis=-2)


def _joint_step(C: np.ndarray, D: np.ndarray, radius: float) -> np.ndarray | None:
    """Linearized move of all rows of ``C`` at once, within a box of half-width ``radius``.

    Constraints on ``f`` are exact; the ``P >= 0`` constraints and the
    objective are linearized at ``C``.
    """
    K = C.shape[0]
    s = math.copysign(1.0, np.linalg.det(C))
    F = C @ D
    N = D.shape[1]
    # f: sum_l D[l, x] dC[j, l] >= -F[j, x]
    G_f = np.zeros((K * N, K * K))
    for j in range(K):
        G_f[j * N:(j + 1) * N, j * K:(j + 1) * K] = D.T
    h_f = -F.reshape(-1)
    A = np.repeat(C[None], K * K, axis=0)
    k_idx, i_idx = np.divmod(np.arange(K * K), K)
    A[np.arange(K * K), k_idx] = np.eye(K)[i_idx]
    grad = _cofactor_matrix(A)
    grad[np.arange(K * K), k_idx] = 0.0
    rows = s * grad.reshape(K * K, -1)
    rhs = -s * np.linalg.det(A)
    G = np.vstack([G_f, rows])
    h = np.concatenate([h_f, rhs])
    scale = np.max(np.abs(G), axis=1)
    keep = scale > 1e-300
    G, h = G[keep] / scale[keep, None], h[keep] / scale[keep]
    h = np.minimum(h, 0.0)
    obj = s * _cofactor_matrix(C).reshape(-1)
    A_eq = np.kron(np.eye(K), np.ones((1, K)))
    res = linprog(-obj, A_ub=-G, b_ub=-h, A_eq=A_eq, b_eq=np.zeros(K),
                  bounds=[(-radius, radius)] * (K * K), method="highs",
                  options=_LP_OPTIONS)
    if res.status != 0 or -res.fun <= 1e-12 * abs(np.linalg.det(C)):
        return None
    return C + res.x.reshape(K, K)


def local_search(D: np.ndarray, P0: np.ndarray, cfg: SolverConfig, incumbent: float = math.inf):
    """Descent from a feasible ``P0``: exact row moves, then a joint move, per iteration.

    A start that is still worse than ``incumbent`` (the best objective found
    by earlier starts) and gained less than ``_STALL_GAIN`` over the last
    ``_STALL_WINDOW`` iterations is abandoned as not converged.

    Returns ``(P, objective, converged, history)``; ``history`` lists the
    incumbent objective after each iteration and never increases.
    """
    P, best = P0, objective(P0)
    C = np.linalg.inv(P)
    K = P.shape[0]
    history = [best]
    converged = False
    radius = cfg.step_init

    def improves(cand):
        return cand is not None and cand[1] < best * (1 - 1e-15)

    for _ in range(cfg.max_iters):
        start = best
        for j in range(K):
            obj, G = _row_program(C, D, j)
            target = _solve_row_lp(obj, G, C[j])
            if target is None or obj @ target <= obj @ C[j] * (1 + 1e-14):
                continue
            step = 1.0
            while step >= cfg.min_step:
                trial = C.copy()
                trial[j] = C[j] + step * (target - C[j])
                cand = _accept(trial, D, cfg)
                if improves(cand):
                    P, best = cand
                    C = np.linalg.inv(P)
                    break
                step *= cfg.step_shrink
        if K > 2 and best > start * (1 - _JOINT_TRIGGER):
            for _ in range(_JOINT_TRIES):
                if radius < cfg.min_step:
                    break
                trial = _joint_step(C, D, radius)
                if trial is None:
                    break
                cand = _accept(trial, D, cfg)
                if improves(cand):
                    P, best = cand
                    C = np.linalg.inv(P)
                    radius = min(2 * radius, 1.0)
                    break
                radius *= cfg.step_shrink
        history.append(best)
        if best >= start * (1 - 1e-12):
            converged = True
            break
        if (len(history) > _STALL_WINDOW and best > incumbent * (1 + 1e-6)
                and history[-1 - _STALL_WINDOW] < best * (1 + _STALL_GAIN)):
            break
        radius = max(radius, cfg.min_step)
    return P, best, converged, history


def _anchors(K: int, n: int, rng: np.random.Generator):
    if math.factorial(K) <= n:
        perms = list(itertools.permutations(range(K)))
        return [perms[i % len(perms)] for i in range(n)]
    return [tuple(rng.permutation(K)) for _ in range(n)]


def _general(src: SourceDistributions, cfg: SolverConfig) -> SolverResult:
    D = src.probs
    K = src.K
    anchors = _anchors(K, cfg.starts, np.random.default_rng([cfg.seed, 2**31]))
    # vertex seeds go first: they usually land near the optimum and make pruning effective
    initial = []
    for P in _vertex_seeds(D, cfg.vertex_seeds, np.random.default_rng([cfg.seed, 2**31 + 1])):
        cand = _accept(np.linalg.inv(P), D, cfg)
        if cand is not None:
            initial.append(cand[0])
    for s, perm in enumerate(anchors):
        initial.append(_initial_matrix(K, perm, np.random.default_rng([cfg.seed, s]), D, cfg)[0])
    best = None
    converged = 0
    histories = []
    for s, P0 in enumerate(initial):
        P, obj, ok, hist = local_search(D, P0, cfg, math.inf if best is None else best[1])
        converged += ok
        histories.append(tuple(hist))
        if best is None or obj < best[1]:
            best = (P, obj, s)
    P, obj, s = best
    dec = canonicalize(decompose(MixtureMatrix(P), src, cfg.feasibility_tol))
    return SolverResult(dec, dec.det_abs, GENERAL, converged, s, histories=tuple(histories))


def _degenerate(src: SourceDistributions) -> SolverResult:
    return SolverResult(trivial_decomposition(src), 1.0, DEGENERATE, no_detectable_effect=True)


def square_support_shortcut(src: SourceDistributions, cfg: SolverConfig | None = None) -> SolverResult:
    """With as many outcomes as variants the sources themselves are the extreme mixture."""
    cfg = cfg or SolverConfig()
    if src.N != src.K:
        raise InputError("square-support shortcut needs N == K")
    if abs(np.linalg.det(src.probs)) <= cfg.det_tol:
        raise SingularDError("stacked sources are singular")
    dec = decompose(MixtureMatrix(src.probs), src, cfg.feasibility_tol)
    dec = canonicalize(dec)
    return SolverResult(dec, dec.det_abs, SQUARE)


def solve_extreme(src: SourceDistributions, cfg: SolverConfig | None = None) -> SolverResult:
    cfg = cfg or SolverConfig()
    if src.N == 0:
        raise EmptySupportError("empty support")
    if not linear_independence_report(src, cfg.rank_tol)["independent"]:
        return _degenerate(src)
    if cfg.use_shortcuts and src.K == 2:
        sol = binary.solve_binary(src.probs[0], src.probs[1], cfg.feasibility_tol,
                                  src.variants, src.support)
        if sol.no_detectable_effect:
            return replace(_degenerate(src), binary=sol)
        return SolverResult(sol.decomposition, sol.decomposition.det_abs, BINARY, binary=sol)
    if cfg.use_shortcuts and src.N == src.K:
        try:
            return square_support_shortcut(src, cfg)
        except SingularDError:
            return _degenerate(src)
    return _general(src, cfg)


def verify_solution(res: SolverResult | Decomposition, src: SourceDistributions,
                    cfg: SolverConfig | None = None) -> dict:
    """Recheck the decomposition conditions from scratch."""
    cfg = cfg or SolverConfig()
    dec = res.decomposition if isinstance(res, SolverResult) else res
    P, F = dec.P, dec.basis
    residual = float(np.max(np.abs(P @ F - src.probs)))
    det_abs = abs(float(np.linalg.det(P)))
    checks = {
        "matrix_nonnegative": bool(np.all(P >= -1e-12)),
        "matrix_row_sums": bool(np.all(np.abs(P.sum(axis=1) - 1) <= 1e-12)),
        "basis_nonnegative": bool(np.all(F >= -cfg.feasibility_tol)),
        "basis_row_sums": bool(np.all(np.abs(F.sum(axis=1) - 1) <= 1e-9)),
        "reconstruction": residual <= cfg.reconstruction_tol,
        "det_consistent": abs(det_abs - dec.det_abs) <= 1e-10,
    }
    return {"checks": checks, "passed": all(checks.values()),
            "residual": residual, "det_abs": det_abs}
