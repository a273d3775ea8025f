"""Entropic Gromov-Wasserstein alignment between the two similarity geometries.

The solver minimizes  sum_{i,j,k,l} (C1_ik - C2_jl)^2 T_ij T_kl  over couplings
T with uniform marginals, by mirror descent: each outer step linearizes the
quadratic objective at the current T and solves the resulting entropic OT
subproblem with Sinkhorn iterations (dual potentials warm-started across
steps).  C1 and C2 are cosine self-similarity matrices of the embedding rows
and the Lab rows.

The quadratic objective is nonconvex, so the solver optionally anneals epsilon
over a 3-step geometric schedule, restarts from seeded perturbed couplings,
and rounds the final coupling to its nearest permutation (Hungarian on T, then
pairwise-swap descent on the GW cost); the lowest-cost candidate wins.

T_ij reads as the probability of assigning text sample i to color sample j;
the headline score is matching accuracy: the fraction of rows whose unique
argmax lands on the identically-indexed color sample.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .lmap import AlignmentReport
from .rsa import cosine_similarity_matrix

# Pairwise-swap descent is O(n^3) per sweep; beyond this size only the
# Hungarian rounding is attempted.
SWAP_DESCENT_MAX_N = 128


class SinkhornUnderflow(ArithmeticError):
    pass


class SolverError(RuntimeError):
    def __init__(self, message: str, iterations: int):
        super().__init__(f"{message} (after {iterations} iterations)")
        self.iterations = iterations


@dataclass
class Coupling:
    T: np.ndarray
    epsilon: float

    def marginal_error(self) -> float:
        n, m = self.T.shape
        row_err = np.abs(self.T.sum(axis=1) - 1.0 / n).max()
        col_err = np.abs(self.T.sum(axis=0) - 1.0 / m).max()
        return float(max(row_err, col_err))


def sinkhorn_plain(a, b, M, eps, max_iter=2000, thr=1e-10) -> np.ndarray:
    """Classic scaling iterations; raises SinkhornUnderflow when exp(-M/eps) dies."""
    K = np.exp(-M / eps)
    if not np.all(np.isfinite(K)) or np.any(K.sum(axis=1) == 0.0) or np.any(
        K.sum(axis=0) == 0.0
    ):
        raise SinkhornUnderflow("kernel underflow")
    u = np.ones_like(a)
    v = np.ones_like(b)
    for _ in range(max_iter):
        Ktu = K.T @ u
        if np.any(Ktu == 0.0) or not np.all(np.isfinite(Ktu)):
            raise SinkhornUnderflow("zero column marginal")
        v = b / Ktu
        Kv = K @ v
        if np.any(Kv == 0.0) or not np.all(np.isfinite(Kv)):
            raise SinkhornUnderflow("zero row marginal")
        u = a / Kv
        T = u[:, None] * K * v[None, :]
        if np.abs(T.sum(axis=0) - b).max() < thr:
            break
    T = u[:, None] * K * v[None, :]
    if not np.all(np.isfinite(T)):
        raise SinkhornUnderflow("non-finite coupling")
    return T


def _lse(A, axis):
    """Stable logsumexp; hand-rolled because scipy call overhead dominates on
    the small matrices that fill the mirror-descent inner loop."""
    mx = A.max(axis=axis)
    return mx + np.log(
        np.exp(A - np.expand_dims(mx, axis)).sum(axis=axis)
    )


def sinkhorn_log(
    a, b, M, eps, max_iter=20000, thr=1e-9, f=None, g=None, return_potentials=False
):
    """Log-domain Sinkhorn; immune to kernel underflow at small epsilon.

    The dual potentials f, g are iterated directly with logsumexp updates, so
    any warm-start values (e.g. the previous step's duals in a mirror-descent
    outer loop) are safe even when the cost matrix has changed a lot since.
    Rows are exact on exit; the column residual drives convergence.
    """
    loga = np.log(a)
    logb = np.log(b)
    # Iterate the scaled potentials f/eps, g/eps against M/eps so the hot loop
    # is two logsumexp reductions and no per-iteration division.
    Me = M / eps
    fe = np.zeros_like(a) if f is None else f / eps
    ge = np.zeros_like(b) if g is None else g / eps
    it = 0
    check_period = 5
    while it < max_iter:
        it += 1
        ge = logb - _lse(fe[:, None] - Me, 0)
        fe = loga - _lse(ge[None, :] - Me, 1)
        if it % check_period:
            continue
        col_err = np.abs(
            np.exp(_lse(fe[:, None] + ge[None, :] - Me, 0)) - b
        ).max()
        if col_err < thr:
            break
    T = np.exp(fe[:, None] + ge[None, :] - Me)
    f = fe * eps
    g = ge * eps
    if not np.all(np.isfinite(T)):
        raise SolverError("log-domain Sinkhorn produced non-finite coupling", it)
    if return_potentials:
        return T, f, g
    return T


def round_to_polytope(T: np.ndarray, a, b) -> np.ndarray:
    """Project a near-feasible plan onto exact marginals (Altschuler-style
    rounding: clip row/column scalings, then add a rank-one correction)."""
    r = T.sum(axis=1)
    with np.errstate(over="ignore"):
        X = T * np.minimum(a / np.where(r > 0, r, 1.0), 1.0)[:, None]
        c = X.sum(axis=0)
        X = X * np.minimum(b / np.where(c > 0, c, 1.0), 1.0)[None, :]
    err_a = a - X.sum(axis=1)
    err_b = b - X.sum(axis=0)
    total = err_a.sum()
    if total > 0:
        X = X + np.outer(err_a, err_b) / total
    return X


def sinkhorn(a, b, M, eps, max_iter=5000, thr=1e-10) -> np.ndarray:
    """Plain Sinkhorn with a single log-domain retry on numerical underflow."""
    try:
        return sinkhorn_plain(a, b, M, eps, max_iter, thr)
    except SinkhornUnderflow:
        return sinkhorn_log(a, b, M, eps, max_iter, thr)


def _gw_tensor(constC, C1, C2, T):
    return constC - 2.0 * (C1 @ T @ C2.T)


def gw_cost(C1, C2, T) -> float:
    p = T.sum(axis=1)
    q = T.sum(axis=0)
    constC = np.outer((C1**2) @ p, np.ones_like(q)) + np.outer(
        np.ones_like(p), (C2**2) @ q
    )
    return float((_gw_tensor(constC, C1, C2, T) * T).sum())


def _perm_cost(C1, C2, perm) -> float:
    n = len(perm)
    D = C1 - C2[np.ix_(perm, perm)]
    return float((D**2).sum()) / (n * n)


def _swap_descent(C1, C2, perm, use_3cycles=False) -> np.ndarray:
    """Greedy local descent on the permutation GW cost.

    Always explores pairwise swaps; on tiny instances 3-cycles as well, since
    the 2-swap neighborhood alone leaves shallow local optima behind.
    """
    n = len(perm)
    perm = perm.copy()
    best = _perm_cost(C1, C2, perm)
    improved = True
    while improved:
        improved = False
        for i in range(n - 1):
            for j in range(i + 1, n):
                perm[i], perm[j] = perm[j], perm[i]
                c = _perm_cost(C1, C2, perm)
                if c < best - 1e-15:
                    best = c
                    improved = True
                else:
                    perm[i], perm[j] = perm[j], perm[i]
        if use_3cycles:
            for i in range(n):
                for j in range(n):
                    for k in range(n):
                        if i == j or j == k or i == k:
                            continue
                        perm[i], perm[j], perm[k] = perm[j], perm[k], perm[i]
                        c = _perm_cost(C1, C2, perm)
                        if c < best - 1e-15:
                            best = c
                            improved = True
                        else:
                            perm[i], perm[j], perm[k] = perm[k], perm[i], perm[j]
    return perm


RANDOM_DESCENT_MAX_N = 12
RANDOM_DESCENT_STARTS = 24
# Up to this size all n! permutations are scored outright, which is both
# faster than multi-start descent and exact.
EXHAUSTIVE_PERM_MAX_N = 7


def _exhaustive_permutation(C1, C2):
    from itertools import permutations

    n = C1.shape[0]
    best_perm, best_cost = None, np.inf
    for perm in permutations(range(n)):
        c = _perm_cost(C1, C2, np.asarray(perm))
        if c < best_cost:
            best_perm, best_cost = np.asarray(perm), c
    return best_perm


def _refined_permutation_coupling(C1, C2, T, rng=None):
    """Round T to a permutation coupling and locally improve it.

    Tiny instances are solved exactly by enumerating every permutation; on
    small ones a handful of seeded random starts join the Hungarian start,
    since 2-swap descent alone can stall in a shallow basin.
    """
    n = T.shape[0]
    if n <= EXHAUSTIVE_PERM_MAX_N:
        best = _exhaustive_permutation(C1, C2)
        P = np.zeros_like(T)
        P[np.arange(n), best] = 1.0 / n
        return P
    # A degenerate (near-uniform) coupling leaves the assignment problem tied
    # everywhere, and exact ties resolve toward the identity permutation,
    # which would fake a perfect diagonal match.  Seeded jitter far below any
    # real signal breaks such ties arbitrarily instead.
    tie_rng = rng if rng is not None else np.random.default_rng(0)
    jitter = 1e-9 * T.max() * tie_rng.random(T.shape)
    _, hungarian = linear_sum_assignment(-(T + jitter))
    starts = [hungarian]
    if rng is not None and n <= RANDOM_DESCENT_MAX_N:
        starts.extend(rng.permutation(n) for _ in range(RANDOM_DESCENT_STARTS))
    best_perm, best_cost = hungarian, _perm_cost(C1, C2, hungarian)
    if n <= SWAP_DESCENT_MAX_N:
        for start in starts:
            perm = _swap_descent(
                C1, C2, start, use_3cycles=n <= RANDOM_DESCENT_MAX_N
            )
            c = _perm_cost(C1, C2, perm)
            if c < best_cost:
                best_perm, best_cost = perm, c
    P = np.zeros_like(T)
    P[np.arange(n), best_perm] = 1.0 / n
    return P


def entropic_gw(
    C1: np.ndarray,
    C2: np.ndarray,
    epsilon: float = 5e-3,
    max_outer: int = 50,
    tol: float = 1e-7,
    schedule: bool = False,
    T_init: np.ndarray | None = None,
    inner_iter: int = 100,
) -> tuple[np.ndarray, float, int]:
    """Mirror-descent entropic GW on precomputed similarity matrices.

    ``schedule`` anneals epsilon geometrically over 3 steps (25x, 5x, 1x) to
    dodge shallow local couplings before sharpening at the target epsilon.
    Returns (coupling, final cost, outer iterations used).
    """
    n, m = C1.shape[0], C2.shape[0]
    p = np.full(n, 1.0 / n)
    q = np.full(m, 1.0 / m)
    constC = np.outer((C1**2) @ p, np.ones(m)) + np.outer(np.ones(n), (C2**2) @ q)
    if T_init is None:
        # The exact product coupling is a fixed point of the mirror-descent
        # update (its linearized cost is additively separable), so a seeded
        # relative perturbation is required to let the iteration move at all.
        T = np.outer(p, q)
        T *= 1.0 + 1e-2 * np.random.default_rng(0).random((n, m))
        T *= 1.0 / T.sum()
    else:
        T = T_init.copy()
    # Coarse annealing steps only need to steer T into a good basin; the full
    # outer budget is reserved for the target epsilon.
    if schedule:
        coarse = max(3, max_outer // 10)
        eps_steps = [(epsilon * 25.0, coarse), (epsilon * 5.0, coarse), (epsilon, max_outer)]
    else:
        eps_steps = [(epsilon, max_outer)]
    outer_used = 0
    for eps, budget in eps_steps:
        f = g = None
        prev_cost = np.inf
        for _ in range(budget):
            outer_used += 1
            tens = _gw_tensor(constC, C1, C2, T)
            cost = float((tens * T).sum())
            if abs(prev_cost - cost) < 1e-10 * max(1.0, abs(cost)):
                break
            prev_cost = cost
            # Inexact inner solves are fine mid-descent; the final plan is
            # rounded onto the polytope below.
            T_next, f, g = sinkhorn_log(
                p, q, 2.0 * tens, eps, max_iter=inner_iter, thr=1e-9, f=f, g=g,
                return_potentials=True,
            )
            change = np.abs(T_next - T).max()
            T = T_next
            if change < tol:
                break
    T = round_to_polytope(T, p, q)
    return T, float((_gw_tensor(constC, C1, C2, T) * T).sum()), outer_used


def matching_accuracy(T: np.ndarray) -> float:
    """Fraction of rows whose strict argmax is the diagonal entry; ties count as wrong."""
    n = T.shape[0]
    correct = 0
    for i in range(n):
        row = T[i]
        top = row.max()
        winners = np.flatnonzero(row == top)
        if winners.size == 1 and winners[0] == i:
            correct += 1
    return correct / n


def gw_align(
    X: np.ndarray,
    Y: np.ndarray,
    epsilon: float = 5e-3,
    max_outer: int = 50,
    tol: float = 1e-7,
    schedule: bool = False,
    restarts: int = 1,
    refine: bool = True,
    seed: int = 0,
    slice_name: str = "",
) -> tuple[Coupling, AlignmentReport]:
    """Align X rows with Y rows; keeps the lowest-cost coupling found.

    Restart 0 starts from the product coupling; later restarts perturb it with
    seeded noise before projecting back onto the polytope, so the whole call
    stays deterministic for a fixed seed.  ``refine`` additionally considers
    the permutation rounding of each entropic solution.
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.shape[0] != Y.shape[0]:
        raise ValueError("X and Y must have the same number of rows")
    if X.shape[0] < 2:
        raise ValueError("need at least 2 samples")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    _, keep_x = cosine_similarity_matrix(X)
    _, keep_y = cosine_similarity_matrix(Y)
    keep = keep_x & keep_y
    C1, _ = cosine_similarity_matrix(X[keep])
    C2, _ = cosine_similarity_matrix(Y[keep])
    n = C1.shape[0]
    p = np.full(n, 1.0 / n)

    rng = np.random.default_rng(seed)
    best_T, best_cost, total_iters = None, np.inf, 0
    for r in range(max(1, restarts)):
        if r == 0:
            T0 = None
        else:
            T0 = np.outer(p, p) * (0.5 + rng.random((n, n)))
            T0 = sinkhorn(p, p, -np.log(T0), 1.0)  # project back to the polytope
        # Tiny instances are finished off exactly by permutation enumeration,
        # so the entropic pass only needs a rough basin, not a polished plan.
        if refine and n <= EXHAUSTIVE_PERM_MAX_N:
            budgets = {"max_outer": min(max_outer, 10), "inner_iter": 25}
        else:
            budgets = {"max_outer": max_outer, "inner_iter": 100}
        T, cost, iters = entropic_gw(
            C1, C2, epsilon, tol=tol, schedule=schedule, T_init=T0, **budgets
        )
        total_iters += iters
        candidates = [(T, cost)]
        if refine:
            P = _refined_permutation_coupling(C1, C2, T, rng)
            candidates.append((P, gw_cost(C1, C2, P)))
        for cT, cc in candidates:
            # Strict improvement only: ties keep the smoother entropic plan.
            if cc < best_cost - 1e-12 or best_T is None:
                best_T, best_cost = cT, cc

    coupling = Coupling(best_T, epsilon)
    acc = matching_accuracy(best_T)
    report = AlignmentReport(
        method="gw",
        score=acc,
        slice_name=slice_name,
        n=n,
        params={
            "epsilon": epsilon,
            "max_outer": max_outer,
            "tol": tol,
            "schedule": schedule,
            "restarts": restarts,
            "refine": refine,
            "seed": seed,
            "excluded_rows": int((~keep).sum()),
        },
        detail=[
            {
                "gw_cost": best_cost,
                "matching_accuracy": acc,
                "outer_iterations": total_iters,
                "marginal_error": coupling.marginal_error(),
            }
        ],
    )
    return coupling, report
