"""Problem containers, input validation and the complete-first row partition."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import (
    DimensionMismatch,
    DisconnectedWeights,
    NegativeDissimilarity,
    NegativeWeight,
    RankDeficientConditioning,
    ZeroDissimilarity,
)

RANK_RTOL = 1e-10


class InitStrategy(str, enum.Enum):
    NAIVE = "naive"
    CLOSED_FORM = "closed_form"
    COMPLETE_SMACOF = "complete_smacof"


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Problem:
    """A conditional MDS problem.

    ``conditioning`` holds the known features, with ``NaN`` marking missing
    entries. ``delta_tilde`` may also contain ``NaN`` for missing dissimilarities
    before validation; :func:`validate` maps those to zero weights.
    """

    delta_tilde: np.ndarray
    weights: np.ndarray
    conditioning: np.ndarray
    p: int

    def __post_init__(self):
        object.__setattr__(self, "delta_tilde", _frozen(self.delta_tilde))
        object.__setattr__(self, "weights", _frozen(self.weights))
        cond = np.array(self.conditioning, dtype=float)
        if cond.ndim == 1:
            cond = cond[:, None]
        cond.setflags(write=False)
        object.__setattr__(self, "conditioning", cond)

    @property
    def n(self) -> int:
        return self.delta_tilde.shape[0]

    @property
    def q(self) -> int:
        return self.conditioning.shape[1]

    @property
    def missing(self) -> np.ndarray:
        return np.isnan(self.conditioning)

    @property
    def equal_weights(self) -> bool:
        """True when every off-diagonal weight is the same positive value."""
        off = self.weights[~np.eye(self.n, dtype=bool)]
        return off.size > 0 and off[0] > 0 and bool(np.all(off == off[0]))


@dataclass(frozen=True)
class Partition:
    permutation: np.ndarray
    n1: int
    n2: int
    mask: np.ndarray

    @property
    def inverse(self) -> np.ndarray:
        return np.argsort(self.permutation, kind="stable")

    @property
    def complete_rows(self) -> np.ndarray:
        return self.permutation[: self.n1]

    @property
    def incomplete_rows(self) -> np.ndarray:
        return self.permutation[self.n1 :]

    def apply_rows(self, x):
        return np.asarray(x)[self.permutation]

    def apply_square(self, x):
        x = np.asarray(x)
        return x[np.ix_(self.permutation, self.permutation)]

    def restore_rows(self, x):
        return np.asarray(x)[self.inverse]

    def restore_square(self, x):
        inv = self.inverse
        return np.asarray(x)[np.ix_(inv, inv)]


@dataclass(frozen=True)
class SolverOptions:
    gamma: float = 1e-6
    l_max: int = 1000
    seed: int = 0
    init: InitStrategy = InitStrategy.CLOSED_FORM
    restarts: int = 1
    force_general_path: bool = False

    def __post_init__(self):
        if not self.gamma >= 0:
            raise ValueError("gamma must be nonnegative")
        if self.l_max < 1:
            raise ValueError("l_max must be at least 1")
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")
        object.__setattr__(self, "init", InitStrategy(self.init))


@dataclass(frozen=True)
class Solution:
    """Fitted configuration.

    ``u`` is in original object order; ``v2_tilde`` rows follow
    ``partition.incomplete_rows``.
    """

    u: np.ndarray
    b: np.ndarray
    v2_tilde: np.ndarray
    stress_trace: tuple
    iterations: int
    converged: bool
    partition: Partition | None = field(default=None, repr=False)

    @property
    def normalized_stress(self) -> float:
        return self.stress_trace[-1]

    def v_tilde(self, conditioning) -> np.ndarray:
        """Embedded conditioning for all objects, in original order."""
        cond = np.asarray(conditioning, dtype=float)
        out = np.empty_like(cond)
        part = self.partition
        if part is None:
            return cond @ self.b
        out[part.complete_rows] = cond[part.complete_rows] @ self.b
        out[part.incomplete_rows] = self.v2_tilde
        return out


def is_connected(weights) -> bool:
    w = np.asarray(weights)
    if w.shape[0] <= 1:
        return True
    n_comp, _ = connected_components(csr_matrix(w > 0), directed=False)
    return n_comp == 1


def sammon_weights(delta_tilde):
    """Sammon weights ``1 / (delta_ij * sum_{i<j} delta_ij)``."""
    d = np.asarray(delta_tilde, dtype=float)
    n = d.shape[0]
    off = ~np.eye(n, dtype=bool)
    if np.any(d[off] == 0):
        raise ZeroDissimilarity("Sammon weights need strictly positive off-diagonal dissimilarities")
    total = np.triu(d, 1).sum()
    w = np.zeros_like(d)
    w[off] = 1.0 / (d[off] * total)
    return w


def _symmetrize(x, how):
    if how == "avg":
        return 0.5 * (x + x.T)
    if how == "sum":
        return x + x.T
    raise ValueError(f"unknown symmetrization {how!r}")


def validate(problem: Problem, symmetrize: str = "avg", check_rank: bool = True) -> Problem:
    """Check the problem against the solver's assumptions and return a cleaned copy.

    Asymmetric dissimilarities and weights are symmetrized, missing
    dissimilarities get zero weight, diagonals are zeroed.
    """
    delta = np.array(problem.delta_tilde, dtype=float)
    w = np.array(problem.weights, dtype=float)
    cond = problem.conditioning
    if delta.ndim != 2 or delta.shape[0] != delta.shape[1]:
        raise DimensionMismatch(f"dissimilarities must be square, got {delta.shape}")
    n = delta.shape[0]
    if w.shape != (n, n):
        raise DimensionMismatch(f"weights shape {w.shape} does not match {n} objects")
    if cond.shape[0] != n:
        raise DimensionMismatch(f"conditioning has {cond.shape[0]} rows, expected {n}")
    if problem.p < 1 or cond.shape[1] < 1:
        raise DimensionMismatch("p and q must be at least 1")
    if n < 2:
        raise DimensionMismatch("need at least two objects")

    gone = np.isnan(delta)
    if np.any(np.isnan(w)):
        raise NegativeWeight("weights contain NaN")
    if np.any(w < 0):
        raise NegativeWeight("weights must be nonnegative")
    if np.any(delta[~gone] < 0):
        raise NegativeDissimilarity("dissimilarities must be nonnegative")

    # A pair is missing only if both directions are; otherwise use the observed side.
    filled = np.where(gone, delta.T, delta)
    both_gone = np.isnan(filled)
    filled = np.where(both_gone, 0.0, filled)
    w = np.where(both_gone, 0.0, w)

    if not (np.array_equal(filled, filled.T)):
        filled = _symmetrize(filled, symmetrize)
    if not np.array_equal(w, w.T):
        w = 0.5 * (w + w.T)
    np.fill_diagonal(filled, 0.0)
    np.fill_diagonal(w, 0.0)

    if not is_connected(w):
        raise DisconnectedWeights(
            "the positive-weight graph is not connected; split the problem into its components"
        )

    out = Problem(filled, w, cond, problem.p)
    if check_rank:
        _check_conditioning_rank(out)
    return out


def _check_conditioning_rank(problem: Problem):
    # Differences between complete rows must span all q directions.
    part = partition(problem)
    if part.n1 == 0:
        raise RankDeficientConditioning("no complete conditioning rows")
    v1 = problem.conditioning[part.complete_rows]
    sv = np.linalg.svd(v1 - v1.mean(axis=0), compute_uv=False)
    if sv.size < problem.q or sv[0] <= 0 or sv[-1] <= RANK_RTOL * sv[0]:
        raise RankDeficientConditioning(
            f"complete conditioning rows span fewer than q={problem.q} difference directions"
        )


def partition(problem: Problem) -> Partition:
    """Stable permutation putting complete conditioning rows first."""
    missing = problem.missing
    incomplete = missing.any(axis=1)
    perm = np.concatenate([np.flatnonzero(~incomplete), np.flatnonzero(incomplete)])
    n2 = int(incomplete.sum())
    mask = missing[perm[problem.n - n2 :]].astype(np.int8)
    perm.setflags(write=False)
    mask.setflags(write=False)
    return Partition(perm, problem.n - n2, n2, mask)


def permuted(problem: Problem, part: Partition) -> Problem:
    """The problem with objects reordered by ``part``."""
    return replace(
        problem,
        delta_tilde=part.apply_square(problem.delta_tilde),
        weights=part.apply_square(problem.weights),
        conditioning=part.apply_rows(problem.conditioning),
    )


def subproblem(problem: Problem, rows) -> Problem:
    rows = np.asarray(rows)
    ix = np.ix_(rows, rows)
    return Problem(problem.delta_tilde[ix], problem.weights[ix], problem.conditioning[rows], problem.p)
