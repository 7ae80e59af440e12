"""Stress evaluation and the H, H+ and C matrices shared by all solvers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack, lu_solve
from scipy.spatial.distance import cdist

from .errors import DegenerateDissimilarities, SingularShiftedH


@dataclass(frozen=True)
class StressMatrices:
    n1: int
    h: np.ndarray
    h_pinv: np.ndarray

    @property
    def h11(self):
        return self.h[: self.n1, : self.n1]

    @property
    def h12(self):
        return self.h[: self.n1, self.n1 :]

    @property
    def h21(self):
        return self.h[self.n1 :, : self.n1]

    @property
    def h22(self):
        return self.h[self.n1 :, self.n1 :]


@dataclass(frozen=True)
class CoefficientMatrix:
    n1: int
    c: np.ndarray

    @property
    def c11(self):
        return self.c[: self.n1, : self.n1]

    @property
    def c12(self):
        return self.c[: self.n1, self.n1 :]

    @property
    def c21(self):
        return self.c[self.n1 :, : self.n1]

    @property
    def c22(self):
        return self.c[self.n1 :, self.n1 :]


def embed_conditioning(v1, b, v2_tilde):
    """Stack ``V1 @ B`` over the free incomplete block."""
    v1 = np.asarray(v1, dtype=float)
    v2_tilde = np.asarray(v2_tilde, dtype=float).reshape(-1, v1.shape[1])
    return np.vstack([v1 @ b, v2_tilde])


def joint_distance(u, v_tilde, i, j) -> float:
    du = np.asarray(u[i], dtype=float) - u[j]
    dv = np.asarray(v_tilde[i], dtype=float) - v_tilde[j]
    return float(np.sqrt(du @ du + dv @ dv))


def distances(u, v_tilde):
    """All pairwise joint distances."""
    z = np.hstack([u, v_tilde])
    return cdist(z, z)


def conditional_stress(delta, weights, u, v_tilde) -> float:
    d = distances(u, v_tilde)
    r = weights * (delta - d) ** 2
    return float(np.triu(r, 1).sum())


def stress_denominator(delta, weights) -> float:
    return float(np.triu(weights * delta**2, 1).sum())


def normalized_stress(delta, weights, u, v_tilde) -> float:
    den = stress_denominator(delta, weights)
    if not den > 0:
        raise DegenerateDissimilarities("sum of w * delta^2 is zero")
    return conditional_stress(delta, weights, u, v_tilde) / den


def h_matrix(weights):
    w = np.asarray(weights, dtype=float)
    h = -w.copy()
    np.fill_diagonal(h, 0.0)
    np.fill_diagonal(h, -h.sum(axis=1))
    return h


def build_h(weights, n1=None) -> StressMatrices:
    """H with its Moore-Penrose inverse ``(H + 1)^-1 - 1/N^2``."""
    h = h_matrix(weights)
    n = h.shape[0]
    shifted = h + 1.0
    lu, piv, info = lapack.dgetrf(shifted)
    # H + 1 is singular exactly when the weight graph is disconnected.
    rcond = lapack.dgecon(lu, np.abs(shifted).sum(axis=0).max(), norm="1")[0] if info == 0 else 0.0
    if rcond < 1e-14:
        raise SingularShiftedH("H + 1 is singular; the weight matrix is not irreducible")
    h_pinv = lu_solve((lu, piv), np.eye(n)) - 1.0 / n**2
    h_pinv = 0.5 * (h_pinv + h_pinv.T)
    return StressMatrices(n if n1 is None else n1, h, h_pinv)


def coefficients(wdelta, d, n1=None, out=None) -> CoefficientMatrix:
    """Coefficient matrix from ``w * delta`` and current distances ``d``."""
    c = np.zeros_like(d) if out is None else out
    if out is not None:
        c.fill(0.0)
    np.divide(wdelta, d, out=c, where=d > 0)
    np.negative(c, out=c)
    np.fill_diagonal(c, 0.0)
    np.fill_diagonal(c, -c.sum(axis=1))
    return CoefficientMatrix(c.shape[0] if n1 is None else n1, c)


def build_c(delta, weights, u, v_tilde, n1=None) -> CoefficientMatrix:
    """Majorization coefficients with zero row sums.

    Off-diagonal ``-w delta / d`` (0 where d = 0); the diagonal makes rows sum to 0.
    """
    return coefficients(np.asarray(weights) * delta, distances(u, v_tilde), n1)


class Objective:
    """Per-problem constants and reusable work buffers for the iteration loop.

    Expects symmetric ``delta`` and ``weights`` with zero diagonals. Arrays
    returned by ``distances`` alternate between two buffers, and the matrix in
    the result of ``coefficients`` is overwritten by the next call.
    """

    # Rows per block in ``sweep``; keeps each block's temporaries near 256 KiB.
    BLOCK_BYTES = 1 << 18

    def __init__(self, delta, weights):
        self.delta = np.asarray(delta, dtype=float)
        w = np.asarray(weights, dtype=float)
        n = w.shape[0]
        off = ~np.eye(n, dtype=bool)
        self.weights = None if np.all(w[off] == 1.0) else w
        self.wdelta = self.delta if self.weights is None else w * self.delta
        self.denominator = stress_denominator(self.delta, w)
        if not self.denominator > 0:
            raise DegenerateDissimilarities("sum of w * delta^2 is zero")
        self.n = n
        self._full = None
        self._turn = 0

    def _buffers(self):
        if self._full is None:
            self._full = [np.empty((self.n, self.n)) for _ in range(4)]
        return self._full

    def distances(self, u, v_tilde):
        z = np.hstack([u, v_tilde])
        buf = self._buffers()[self._turn]
        self._turn ^= 1
        return cdist(z, z, out=buf)

    def stress(self, d) -> float:
        """Normalized stress at distances ``d``."""
        r = np.subtract(self.delta, d, out=self._buffers()[3])
        np.multiply(r, r, out=r)
        if self.weights is not None:
            r *= self.weights
        return 0.5 * float(r.sum()) / self.denominator

    def coefficients(self, d, n1=None) -> CoefficientMatrix:
        return coefficients(self.wdelta, d, n1, out=self._buffers()[2])

    def sweep(self, z, m):
        """Normalized stress at configuration ``z`` and ``C(z) @ m``, without forming N x N arrays.

        Rows are processed in blocks small enough to stay in cache, so the
        cost is one streaming read of the dissimilarities per call.
        """
        n = self.n
        rows = max(1, min(n, self.BLOCK_BYTES // (8 * n)))
        d = np.empty((rows, n))
        r = np.empty((rows, n))
        c = np.empty((rows, n))
        pos = np.empty((rows, n), dtype=bool)
        out = np.empty((n, m.shape[1]))
        raw = 0.0
        for s in range(0, n, rows):
            e = min(s + rows, n)
            k = e - s
            db, rb, cb, pb = d[:k], r[:k], c[:k], pos[:k]
            cdist(z[s:e], z, out=db)
            np.subtract(self.delta[s:e], db, out=rb)
            np.multiply(rb, rb, out=rb)
            if self.weights is not None:
                rb *= self.weights[s:e]
            raw += float(rb.sum())
            np.greater(db, 0.0, out=pb)
            cb.fill(0.0)
            np.divide(self.wdelta[s:e], db, out=cb, where=pb)
            np.negative(cb, out=cb)
            diag = (np.arange(k), np.arange(s, e))
            cb[diag] = 0.0
            cb[diag] = -cb.sum(axis=1)
            out[s:e] = cb @ m
        return 0.5 * raw / self.denominator, out
