"""Starting values for the solvers."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import AllCoefficientsClamped, DegenerateWhitening, ValidationError
from .model import InitStrategy, Partition, Problem, SolverOptions, subproblem


@dataclass(frozen=True)
class InitState:
    u0: np.ndarray  # original object order
    b0: np.ndarray
    v2_tilde0: np.ndarray  # partition.incomplete_rows order
    strategy: InitStrategy
    seed: int


def naive_init(problem: Problem, part: Partition, seed: int) -> InitState:
    """Identity transform with standard-normal configuration and incomplete block."""
    rng = np.random.default_rng(seed)
    u0 = rng.standard_normal((problem.n, problem.p))
    v2 = rng.standard_normal((part.n2, problem.q))
    return InitState(u0, np.eye(problem.q), v2, InitStrategy.NAIVE, seed)


def pca_whitening(v):
    """Whitening matrix ``R = E diag(lambda)^-1/2`` of the column-centered covariance."""
    v = np.asarray(v, dtype=float)
    vc = v - v.mean(axis=0)
    cov = vc.T @ vc / max(v.shape[0] - 1, 1)
    evals, evecs = np.linalg.eigh(cov)
    evals, evecs = evals[::-1], evecs[:, ::-1]
    if evals[0] <= 0 or evals[-1] <= 1e-10 * evals[0]:
        raise DegenerateWhitening("covariance of the complete conditioning rows is rank deficient")
    return evecs / np.sqrt(evals)


def regression_transform(v, delta, weights):
    """Estimate B from ``delta^2 ~ mu + sum_k beta_k [r_k'(v_i - v_j)]^2``.

    ``r_k`` is the k-th column of the whitening matrix, so that
    ``B = R diag(sqrt(beta))`` reproduces the fitted squared distances.
    Negative coefficients are set to 0. Returns ``(B, beta)``.
    """
    r = pca_whitening(v)
    i, j = np.triu_indices(v.shape[0], 1)
    keep = weights[i, j] > 0
    i, j = i[keep], j[keep]
    z = ((v[i] - v[j]) @ r) ** 2
    x = np.column_stack([np.ones(len(i)), z])
    y = delta[i, j] ** 2
    xtx = x.T @ x
    xtx[np.diag_indices_from(xtx)] += 1e-12 * np.trace(xtx)
    coef = np.linalg.solve(xtx, x.T @ y)
    beta = np.clip(coef[1:], 0.0, None)
    if not np.any(beta > 0):
        warnings.warn("all regression coefficients were clamped to 0", AllCoefficientsClamped, stacklevel=2)
    return r * np.sqrt(beta), beta


def _fix_signs(vecs):
    for k in range(vecs.shape[1]):
        col = vecs[:, k]
        nz = np.flatnonzero(np.abs(col) > 1e-12 * np.abs(col).max(initial=0.0))
        if nz.size and col[nz[0]] < 0:
            vecs[:, k] = -col
    return vecs


def residual_configuration(delta, v_tilde, p):
    """Top-p eigen-embedding of the double-centered ``-delta^2/2 - V~V~'``."""
    n = delta.shape[0]
    a = -0.5 * delta**2
    j = np.eye(n) - 1.0 / n
    k = j @ (a - v_tilde @ v_tilde.T) @ j
    k = 0.5 * (k + k.T)
    evals, evecs = np.linalg.eigh(k)
    order = np.argsort(-evals, kind="stable")[:p]
    lam = np.clip(evals[order], 0.0, None)
    vecs = _fix_signs(evecs[:, order].copy())
    u = vecs * np.sqrt(lam)
    if u.shape[1] < p:
        u = np.hstack([u, np.zeros((n, p - u.shape[1]))])
    return u


def closed_form_init(problem: Problem, part: Partition, seed: int) -> InitState:
    """Closed-form conditional MDS on the complete rows.

    Incomplete rows of U start standard normal and the incomplete block at 0.
    """
    if part.n1 < problem.q + 2:
        raise ValidationError(f"closed-form init needs at least q+2={problem.q + 2} complete rows")
    rng = np.random.default_rng(seed)
    idx = part.complete_rows
    ix = np.ix_(idx, idx)
    v1 = problem.conditioning[idx]
    delta = problem.delta_tilde[ix]
    b0, _ = regression_transform(v1, delta, problem.weights[ix])
    u0 = np.empty((problem.n, problem.p))
    u0[idx] = residual_configuration(delta, v1 @ b0, problem.p)
    u0[part.incomplete_rows] = rng.standard_normal((part.n2, problem.p))
    return InitState(u0, b0, np.zeros((part.n2, problem.q)), InitStrategy.CLOSED_FORM, seed)


def complete_fit_and_init(problem: Problem, part: Partition, options: SolverOptions):
    """Baseline fit on the complete rows plus the start it induces for the full problem.

    Returns ``(solution, init_state)``; the solution is for the complete-row
    subproblem, in ``part.complete_rows`` order.
    """
    from .solver import run_complete

    rng = np.random.default_rng(options.seed)
    sub = subproblem(problem, part.complete_rows)
    start = InitState(rng.standard_normal((part.n1, problem.p)), np.eye(problem.q),
                      np.zeros((0, problem.q)), InitStrategy.NAIVE, options.seed)
    fitted = run_complete(sub, options, start)
    u0 = np.empty((problem.n, problem.p))
    u0[part.complete_rows] = fitted.u
    u0[part.incomplete_rows] = rng.standard_normal((part.n2, problem.p))
    init = InitState(u0, fitted.b, np.zeros((part.n2, problem.q)), InitStrategy.COMPLETE_SMACOF, options.seed)
    return fitted, init


def complete_smacof_init(problem: Problem, part: Partition, options: SolverOptions) -> InitState:
    """Fit the complete-data baseline on the complete rows and use it as the start."""
    return complete_fit_and_init(problem, part, options)[1]


def make_init(problem: Problem, part: Partition, options: SolverOptions) -> InitState:
    if options.init is InitStrategy.NAIVE:
        return naive_init(problem, part, options.seed)
    if options.init is InitStrategy.CLOSED_FORM:
        return closed_form_init(problem, part, options.seed)
    return complete_smacof_init(problem, part, options)
