"""Equal-weight specialization with O(N^2) iterations.

With unit weights H, H22, S, K_b and K_v2 all have closed forms built from the
column sums of V1 and one q x q inverse of V1'V1, so no N x N inverse is ever
formed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernel
from .errors import DegenerateG, IllConditioned
from .model import Partition, Problem, Solution, SolverOptions, permuted
from .solver import RCOND_MIN, _rcond, iterate


@dataclass(frozen=True)
class EqualWeightCache:
    v1s: np.ndarray
    vtv: np.ndarray
    s_inv: np.ndarray
    kb_inv: np.ndarray
    kb_inv_v1t: np.ndarray
    v1s_sinv_v1t: np.ndarray
    g_scalar: float
    n: int
    n1: int
    n2: int

    # Dense forms of the remaining identities, for checking against the general path.
    @property
    def s(self):
        return self.n * self.vtv - np.outer(self.v1s, self.v1s)

    @property
    def kb(self):
        return self.n * self.vtv - (self.n / self.n1) * np.outer(self.v1s, self.v1s)

    @property
    def h_pinv(self):
        n = self.n
        return (np.eye(n) - 1.0 / n) / n

    @property
    def h12_h22inv(self):
        return np.full((self.n1, self.n2), -1.0 / self.n1)

    @property
    def g_v1t(self):
        return -np.tile(self.v1s_sinv_v1t, (self.n2, 1))

    @property
    def kv2(self):
        return self.n * np.eye(self.n2) - self.g_scalar

    @property
    def kv2_inv(self):
        n, g = self.n, self.g_scalar
        return (np.eye(self.n2) + g / (n - g * self.n2)) / n


def equal_weight_factors(v1, n, n2) -> EqualWeightCache:
    """Closed-form factors for unit weights; inverts only ``V1'V1``."""
    v1 = np.asarray(v1, dtype=float)
    n1, q = v1.shape
    vtv = v1.T @ v1
    if _rcond(vtv) < RCOND_MIN:
        raise IllConditioned("V1'V1 is numerically singular")
    vtv_inv = np.linalg.solve(vtv, np.eye(q))
    v1s = v1.sum(axis=0)
    a = vtv_inv @ np.outer(v1s, v1s)
    tr = np.trace(a)
    s_inv = (np.eye(q) + a / (n - tr)) @ vtv_inv / n
    g = 1.0 + v1s @ s_inv @ v1s
    # Cauchy-Schwarz gives g <= N/N2, with equality only for constant V1.
    if abs(n - g * n2) < 1e-12 * n:
        raise DegenerateG(f"N - g*N2 vanishes (g={g!r}, N={n}, N2={n2})")
    if abs(n1 - tr) < 1e-12 * n1:
        raise IllConditioned("K_b is singular; complete rows have no spread")
    kb_inv = (np.eye(q) + a / (n1 - tr)) @ vtv_inv / n
    v1s_sinv_v1t = (v1s @ s_inv) @ v1.T
    return EqualWeightCache(
        v1s=v1s,
        vtv=vtv,
        s_inv=s_inv,
        kb_inv=kb_inv,
        kb_inv_v1t=kb_inv @ v1.T,
        v1s_sinv_v1t=v1s_sinv_v1t,
        g_scalar=float(g),
        n=n,
        n1=n1,
        n2=n2,
    )


def update_u_equal(coeff: kernel.CoefficientMatrix, u_prev, n):
    ua = coeff.c @ u_prev / n
    return ua - ua.sum(axis=0) / n


def _products(coeff, v1, b_prev, v2_tilde_prev):
    x = np.vstack([v1 @ b_prev, v2_tilde_prev])
    n1 = coeff.n1
    return coeff.c[:n1] @ x, coeff.c[n1:] @ x


def _b_from(cache, top, bottom):
    # -H12 H22^-1 C2. = (1/N1) 1 [column sums of C2.]
    return cache.kb_inv_v1t @ (top + bottom.sum(axis=0) / cache.n1)


def _v2_from(cache, top, bottom):
    va = bottom + cache.v1s_sinv_v1t @ top
    n, g = cache.n, cache.g_scalar
    return va / n + (g / (n * (n - g * cache.n2))) * va.sum(axis=0)


def update_b_equal(cache: EqualWeightCache, coeff, v1, b_prev, v2_tilde_prev):
    top, bottom = _products(coeff, v1, b_prev, v2_tilde_prev)
    return _b_from(cache, top, bottom)


def update_v2_equal(cache: EqualWeightCache, coeff, v1, b_prev, v2_tilde_prev):
    top, bottom = _products(coeff, v1, b_prev, v2_tilde_prev)
    return _v2_from(cache, top, bottom)


def run_equal(problem: Problem, part: Partition, options: SolverOptions, init_state, callback=None) -> Solution:
    """Equal-weight solver.

    V1 is centered before iterating; since distances ignore a common
    translation of the embedded conditioning, the incomplete block is shifted
    into the centered frame and shifted back for every reported iterate.
    """
    pp = permuted(problem, part)
    n, n1, n2 = pp.n, part.n1, part.n2
    v1_raw = pp.conditioning[:n1]
    shift = v1_raw.mean(axis=0)
    v1 = v1_raw - shift
    w = np.ones((n, n))
    np.fill_diagonal(w, 0.0)
    obj = kernel.Objective(pp.delta_tilde, w)
    cache = equal_weight_factors(v1, n, n2)

    def evaluate(u, b, v2):
        # Stress at (u, b, v2) and C applied to [U | V1 B ; V2~] in one pass.
        x = kernel.embed_conditioning(v1, b, v2)
        z = np.hstack([u, x])
        sigma, cz = obj.sweep(z, z)
        return u, b, v2, sigma, cz

    def step(state):
        u, _, _, _, cz = state
        p = u.shape[1]
        cu, cx = cz[:, :p], cz[:, p:]
        top, bottom = cx[:n1], cx[n1:]
        u_new = cu / n
        u_new -= u_new.sum(axis=0) / n
        return evaluate(u_new, _b_from(cache, top, bottom), _v2_from(cache, top, bottom))

    def unshift(state):
        u, b, v2 = state[:3]
        return u, b, v2 + shift @ b

    cb = None if callback is None else (lambda it, st: callback(it, unshift(st)))
    b0 = np.array(init_state.b0, dtype=float)
    v20 = np.array(init_state.v2_tilde0, dtype=float).reshape(n2, pp.q) - shift @ b0
    state0 = evaluate(part.apply_rows(init_state.u0), b0, v20)
    state, trace, it, conv = iterate(state0, step, lambda st: st[3], options, cb)
    u, b, v2 = unshift(state)
    return Solution(part.restore_rows(u), b, v2, trace, it, conv, part)
