"""Imputation of missing conditioning values and fit-quality metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import orthogonal_procrustes

from .errors import DegenerateConfiguration, DimensionMismatch, RankDeficientInput, SingularB

B_RCOND_MIN = 1e-12
CCA_RANK_TOL = 1e-10


@dataclass(frozen=True)
class ImputedConditioning:
    v2_hat: np.ndarray
    preserved_mask: np.ndarray


@dataclass(frozen=True)
class ReplicateReport:
    acc: float
    ps: float
    mse_b: float
    mse_v: float = float("nan")


def impute(v2_observed, mask, v2_tilde, b) -> ImputedConditioning:
    """Recover missing conditioning entries from the embedded block.

    Missing entries come from ``[(V~2 - (V2 o (1-M)) B) o M] B^-1``; observed
    entries are copied through unchanged. For fully missing rows this is
    ``V~2 B^-1``.
    """
    mask = np.asarray(mask).astype(bool)
    v2_tilde = np.asarray(v2_tilde, dtype=float)
    b = np.asarray(b, dtype=float)
    sv = np.linalg.svd(b, compute_uv=False)
    if sv[0] == 0 or sv[-1] / sv[0] < B_RCOND_MIN:
        raise SingularB("B is not invertible; only the embedded coordinates are available")
    observed = np.where(mask, 0.0, np.asarray(v2_observed, dtype=float))
    resid = np.where(mask, v2_tilde - observed @ b, 0.0)
    fill = np.linalg.solve(b.T, resid.T).T
    v2_hat = np.where(mask, fill, observed)
    return ImputedConditioning(v2_hat, ~mask)


def _centered(x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    return x - x.mean(axis=0)


def _orth_basis(x):
    q, r = np.linalg.qr(x)
    d = np.abs(np.diag(r))
    if d.size == 0 or d.min() <= CCA_RANK_TOL * max(d.max(), 1e-300):
        raise RankDeficientInput("configuration is rank deficient after centering")
    return q


def canonical_correlations(x, y):
    qx = _orth_basis(_centered(x))
    qy = _orth_basis(_centered(y))
    return np.clip(np.linalg.svd(qx.T @ qy, compute_uv=False), 0.0, 1.0)


def acc(u_learned, u_true) -> float:
    """Average canonical correlation between two configurations."""
    u_learned = np.asarray(u_learned)
    u_true = np.asarray(u_true)
    if u_learned.shape[0] != u_true.shape[0]:
        raise DimensionMismatch("configurations must have the same number of rows")
    k = min(u_learned.shape[1] if u_learned.ndim > 1 else 1, u_true.shape[1] if u_true.ndim > 1 else 1)
    return float(np.mean(canonical_correlations(u_learned, u_true)[:k]))


def procrustes_statistic(x, y) -> float:
    """Normalized Procrustes statistic; 0 iff y is a similarity transform of x."""
    x, y = _centered(x), _centered(y)
    if x.shape != y.shape:
        raise DimensionMismatch(f"shapes {x.shape} and {y.shape} differ")
    sxx, syy = np.sum(x * x), np.sum(y * y)
    if sxx == 0 or syy == 0:
        raise DegenerateConfiguration("configuration collapses to a point")
    s = np.linalg.svd(x.T @ y, compute_uv=False).sum()
    return float(max(0.0, 1.0 - s * s / (sxx * syy)))


def mse_b(b_learned, b_true) -> float:
    """Mean squared error of B after the best right orthogonal alignment.

    Distances only see ``B B'``, so ``B`` and ``B Q`` fit equally well.
    """
    b_learned = np.asarray(b_learned, dtype=float)
    b_true = np.asarray(b_true, dtype=float)
    if b_learned.shape != b_true.shape:
        raise DimensionMismatch(f"shapes {b_learned.shape} and {b_true.shape} differ")
    q, _ = orthogonal_procrustes(b_learned, b_true)
    return float(np.mean((b_learned @ q - b_true) ** 2))


def mse_v(v2_hat, v2_true) -> float:
    v2_hat = np.asarray(v2_hat, dtype=float)
    v2_true = np.asarray(v2_true, dtype=float)
    if v2_hat.shape != v2_true.shape:
        raise DimensionMismatch(f"shapes {v2_hat.shape} and {v2_true.shape} differ")
    return float(np.mean((v2_hat - v2_true) ** 2))
