"""Majorization solvers for conditional MDS.

``run_missing`` handles incomplete conditioning rows with arbitrary weights,
``run_complete`` is the complete-data conditional SMACOF baseline and
``run_multistart`` keeps the lowest-stress fit over several seeded starts.
All of them work on the complete-first ordering internally and report ``u`` in
the caller's object order.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from . import kernel
from .errors import CondMDSError, IllConditioned, NonMonotoneStress
from .model import Partition, Problem, Solution, SolverOptions, partition, permuted, validate

log = logging.getLogger(__name__)

RCOND_MIN = 1e-12
MONOTONE_RTOL = 1e-10


@dataclass(frozen=True)
class FactorCache:
    h_pinv: np.ndarray
    h12_h22inv: np.ndarray
    kb_inv_v1t: np.ndarray
    g_v1t: np.ndarray
    kv2_inv: np.ndarray
    s: np.ndarray
    rcond: dict = field(default_factory=dict)


def _rcond(a) -> float:
    if a.size == 0:
        return 1.0
    sv = np.linalg.svd(a, compute_uv=False)
    return float(sv[-1] / sv[0]) if sv[0] > 0 else 0.0


def _checked(name, a, rcond):
    r = _rcond(a)
    rcond[name] = r
    if r < RCOND_MIN:
        raise IllConditioned(f"{name} is numerically singular (rcond={r:.3g})")


def precompute(v1, sm: kernel.StressMatrices) -> FactorCache:
    """Factors reused by every iteration of the general path.

    ``v1`` holds the complete conditioning rows and ``sm`` the stress matrices
    blocked at ``len(v1)``.
    """
    v1 = np.asarray(v1, dtype=float)
    rcond = {}
    s = v1.T @ sm.h11 @ v1
    s = 0.5 * (s + s.T)
    _checked("S", s, rcond)
    h22_chol = cho_factor(sm.h22)
    h12_h22inv = cho_solve(h22_chol, sm.h21).T
    h21_v1 = sm.h21 @ v1
    kb = s - v1.T @ (h12_h22inv @ h21_v1)
    _checked("K_b", kb, rcond)
    g_v1t = h21_v1 @ np.linalg.solve(s, v1.T)
    kv2 = sm.h22 - g_v1t @ sm.h12
    _checked("K_v2", kv2, rcond)
    return FactorCache(
        h_pinv=sm.h_pinv,
        h12_h22inv=h12_h22inv,
        kb_inv_v1t=np.linalg.solve(kb, v1.T),
        g_v1t=g_v1t,
        kv2_inv=np.linalg.solve(kv2, np.eye(kv2.shape[0])),
        s=s,
        rcond=rcond,
    )


def update_u(cache: FactorCache, coeff: kernel.CoefficientMatrix, u_prev):
    """Guttman transform ``H+ C U``."""
    return cache.h_pinv @ (coeff.c @ u_prev)


def update_b(cache: FactorCache, coeff: kernel.CoefficientMatrix, v1, b_prev, v2_tilde_prev):
    p = cache.h12_h22inv
    m1 = coeff.c11 - p @ coeff.c21
    m2 = coeff.c12 - p @ coeff.c22
    return cache.kb_inv_v1t @ (m1 @ (v1 @ b_prev) + m2 @ v2_tilde_prev)


def update_v2(cache: FactorCache, coeff: kernel.CoefficientMatrix, v1, b_prev, v2_tilde_prev):
    gv = cache.g_v1t
    m1 = coeff.c21 - gv @ coeff.c11
    m2 = coeff.c22 - gv @ coeff.c12
    return cache.kv2_inv @ (m1 @ (v1 @ b_prev) + m2 @ v2_tilde_prev)


def iterate(state, step, stress, options: SolverOptions, callback=None):
    """Shared stopping rule: stop at ``l_max`` or when the stress drop is at most gamma."""
    sigma = stress(state)
    trace = [sigma]
    prev = np.inf
    tol = MONOTONE_RTOL * max(sigma, 1.0)
    it = 0
    while it < options.l_max and prev - sigma > options.gamma:
        state = step(state)
        it += 1
        prev, sigma = sigma, stress(state)
        if sigma > prev + tol:
            raise NonMonotoneStress(
                f"stress increased from {prev!r} to {sigma!r} at iteration {it}"
            )
        trace.append(sigma)
        if callback is not None:
            callback(it, state)
    return state, tuple(trace), it, bool(prev - sigma <= options.gamma)


def run_missing(problem: Problem, part: Partition, options: SolverOptions, init_state, callback=None) -> Solution:
    """General-weight solver for problems with incomplete conditioning rows.

    ``callback(l, (u, b, v2_tilde))`` sees iterates in complete-first order.
    """
    if part.n2 == 0:
        return run_complete(problem, options, init_state, callback=callback)
    pp = permuted(problem, part)
    n1 = part.n1
    v1 = pp.conditioning[:n1]
    obj = kernel.Objective(pp.delta_tilde, pp.weights)
    cache = precompute(v1, kernel.build_h(pp.weights, n1))

    def with_distances(u, b, v2):
        return u, b, v2, obj.distances(u, kernel.embed_conditioning(v1, b, v2))

    def step(state):
        u, b, v2, d = state
        coeff = obj.coefficients(d, n1)
        return with_distances(
            update_u(cache, coeff, u),
            update_b(cache, coeff, v1, b, v2),
            update_v2(cache, coeff, v1, b, v2),
        )

    cb = None if callback is None else (lambda it, st: callback(it, st[:3]))
    state0 = with_distances(part.apply_rows(init_state.u0), np.array(init_state.b0, dtype=float),
                            np.array(init_state.v2_tilde0, dtype=float).reshape(part.n2, pp.q))
    (u, b, v2, _), trace, it, conv = iterate(state0, step, lambda st: obj.stress(st[3]), options, cb)
    return Solution(part.restore_rows(u), b, v2, trace, it, conv, part)


def run_complete(problem: Problem, options: SolverOptions, init_state, callback=None) -> Solution:
    """Conditional SMACOF on fully observed conditioning."""
    v = np.asarray(problem.conditioning, dtype=float)
    if np.isnan(v).any():
        raise ValueError("run_complete needs complete conditioning; restrict to complete rows first")
    w = problem.weights
    obj = kernel.Objective(problem.delta_tilde, w)
    sm = kernel.build_h(w)
    vhv = v.T @ sm.h @ v
    rc = _rcond(vhv)
    if rc < RCOND_MIN:
        raise IllConditioned(f"V'HV is numerically singular (rcond={rc:.3g})")
    vhv_inv_vt = np.linalg.solve(vhv, v.T)

    def with_distances(u, b):
        return u, b, obj.distances(u, v @ b)

    def step(state):
        u, b, d = state
        c = obj.coefficients(d).c
        return with_distances(sm.h_pinv @ (c @ u), vhv_inv_vt @ (c @ (v @ b)))

    empty = np.zeros((0, v.shape[1]))
    cb = None if callback is None else (lambda it, st: callback(it, (st[0], st[1], empty)))
    state0 = with_distances(np.array(init_state.u0, dtype=float), np.array(init_state.b0, dtype=float))
    (u, b, _), trace, it, conv = iterate(state0, step, lambda st: obj.stress(st[2]), options, cb)
    return Solution(u, b, empty, trace, it, conv, partition(problem))


def run_configured(problem: Problem, part: Partition, options: SolverOptions, init_state, callback=None) -> Solution:
    """Pick the equal-weight fast path when it applies, else the general path."""
    from .fastpath import run_equal

    if part.n2 > 0 and problem.equal_weights and not options.force_general_path:
        return run_equal(problem, part, options, init_state, callback=callback)
    return run_missing(problem, part, options, init_state, callback=callback)


def run_multistart(problem: Problem, part: Partition, options: SolverOptions) -> Solution:
    """Best of ``options.restarts`` runs seeded ``seed, seed + 1, ...``."""
    from .initializers import make_init

    best = None
    last_error = None
    for r in range(options.restarts):
        opts = replace(options, seed=options.seed + r, restarts=1)
        try:
            init = make_init(problem, part, opts)
            sol = run_configured(problem, part, opts, init)
        except CondMDSError as exc:
            log.warning("restart %d failed: %s", r, exc)
            last_error = exc
            continue
        log.debug("restart %d: normalized stress %.6g after %d iterations", r, sol.normalized_stress, sol.iterations)
        if best is None or sol.normalized_stress < best.normalized_stress:
            best = sol
    if best is None:
        raise last_error
    return best


def fit(problem: Problem, options: SolverOptions | None = None, symmetrize: str = "avg") -> Solution:
    """Validate, partition and solve with multi-start."""
    options = options or SolverOptions()
    problem = validate(problem, symmetrize=symmetrize)
    return run_multistart(problem, partition(problem), options)
