"""Car-brand perception simulator and Monte Carlo benchmark.

Seven Uniform(0, 1) features generate weighted Euclidean dissimilarities. The
first four (Quality, Safety, Value, Performance) are handed to the solver as
conditioning, with a random subset of rows masked; the last three (Eco,
Design, Technology) are the configuration the solver should recover.
"""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import CondMDSError
from .evaluation import ReplicateReport, acc, impute, mse_b, mse_v, procrustes_statistic
from .initializers import complete_fit_and_init, naive_init
from .model import Problem, SolverOptions, partition, validate
from .solver import run_configured

log = logging.getLogger(__name__)

FEATURES = ("Quality", "Safety", "Value", "Performance", "Eco", "Design", "Technology")
CONSUMER_REPORTS = np.array([90, 88, 83, 82, 81, 70, 68]) / 562
N_KNOWN = 4
P_FIT = 3

METHODS = ("complete_only", "proposed_naive", "proposed_smacof_init")
METRICS = ("acc", "ps", "mse_b", "mse_v")


@dataclass(frozen=True)
class SimConfig:
    n: int = 100
    n1_ratio: float = 0.5
    zeta1: float = 0.2
    zeta2: float = 0.05
    weight_mode: str = "consumer_reports"
    replicates: int = 100
    seed: int = 0
    noise_pairs: str = "unordered"

    def __post_init__(self):
        if self.n < N_KNOWN + 3:
            raise ValueError(f"n must be at least {N_KNOWN + 3}")
        if not 0 < self.n1_ratio <= 1:
            raise ValueError("n1_ratio must lie in (0, 1]")
        if self.zeta1 < 0 or self.zeta2 < 0:
            raise ValueError("noise fractions must be nonnegative")
        if self.weight_mode not in ("consumer_reports", "random_uniform"):
            raise ValueError(f"unknown weight mode {self.weight_mode!r}")
        if self.noise_pairs not in ("unordered", "ordered"):
            raise ValueError(f"unknown noise_pairs {self.noise_pairs!r}")
        if self.replicates < 1:
            raise ValueError("replicates must be at least 1")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")

    @property
    def n_masked(self) -> int:
        # Guard against 100 * (1 - 0.7) = 30.000000000000004.
        return math.ceil(round(self.n * (1.0 - self.n1_ratio), 9))


@dataclass(frozen=True)
class GroundTruth:
    features: np.ndarray  # noise-free, N x 7
    feature_weights: np.ndarray
    masked_rows: np.ndarray

    @property
    def u(self):
        """Unknown features scaled into distance units."""
        return self.features[:, N_KNOWN:] * np.sqrt(self.feature_weights[N_KNOWN:])

    @property
    def v(self):
        return self.features[:, :N_KNOWN]

    @property
    def b(self):
        return np.diag(np.sqrt(self.feature_weights[:N_KNOWN]))


def weighted_distances(features, weights):
    diff = features[:, None, :] - features[None, :, :]
    return np.sqrt(np.einsum("ijk,k->ij", diff**2, weights))


def gen_replicate(config: SimConfig, replicate_index: int):
    """One simulated data set; returns ``(problem, truth)``."""
    rng = np.random.default_rng(config.seed + replicate_index)
    n = config.n
    feats = rng.uniform(size=(n, len(FEATURES)))
    if config.weight_mode == "consumer_reports":
        w = CONSUMER_REPORTS.copy()
    else:
        raw = rng.uniform(3, 7, size=len(FEATURES))
        w = raw / raw.sum()
    dist = weighted_distances(feats, w)

    if config.noise_pairs == "unordered":
        iu = np.triu_indices(n, 1)
        delta = np.zeros_like(dist)
        delta[iu] = dist[iu] + config.zeta1 * dist[iu] * rng.standard_normal(len(iu[0]))
        delta = delta + delta.T
    else:
        delta = dist + config.zeta1 * dist * rng.standard_normal((n, n))
        delta = 0.5 * (delta + delta.T)
    delta = np.clip(delta, 0.0, None)
    np.fill_diagonal(delta, 0.0)

    noisy = feats + config.zeta2 * np.abs(feats) * rng.standard_normal(feats.shape)
    cond = noisy[:, :N_KNOWN].copy()
    masked = np.sort(rng.choice(n, size=config.n_masked, replace=False))
    cond[masked] = np.nan

    weights = np.ones((n, n))
    np.fill_diagonal(weights, 0.0)
    return Problem(delta, weights, cond, P_FIT), GroundTruth(feats, w, masked)


def _solver_seed(config, replicate_index):
    return int(np.random.SeedSequence([config.seed, replicate_index]).generate_state(1)[0])


def _report(u, rows, truth, b, v2_hat=None, v2_rows=None):
    return ReplicateReport(
        acc=acc(u, truth.u[rows]),
        ps=procrustes_statistic(u, truth.u[rows]),
        mse_b=mse_b(b, truth.b),
        mse_v=float("nan") if v2_hat is None else mse_v(v2_hat, truth.v[v2_rows]),
    )


def evaluate_replicate(config: SimConfig, replicate_index: int, options: SolverOptions | None = None):
    """Fit the three compared methods on one replicate; returns ``{method: ReplicateReport}``."""
    options = replace(options or SolverOptions(), seed=_solver_seed(config, replicate_index))
    problem, truth = gen_replicate(config, replicate_index)
    problem = validate(problem)
    part = partition(problem)
    everyone = np.arange(problem.n)
    out = {}

    complete_fit, smacof_start = complete_fit_and_init(problem, part, options)
    out["complete_only"] = _report(complete_fit.u, part.complete_rows, truth, complete_fit.b)

    starts = {"proposed_naive": naive_init(problem, part, options.seed), "proposed_smacof_init": smacof_start}
    for method, start in starts.items():
        sol = run_configured(problem, part, options, start)
        v2_hat = None
        if part.n2:
            observed = problem.conditioning[part.incomplete_rows]
            v2_hat = impute(observed, part.mask, sol.v2_tilde, sol.b).v2_hat
        out[method] = _report(sol.u, everyone, truth, sol.b, v2_hat, part.incomplete_rows)
    return out


def _task(args):
    config, idx, options = args
    try:
        return idx, evaluate_replicate(config, idx, options), None
    except CondMDSError as exc:
        return idx, None, f"{type(exc).__name__}: {exc}"


@dataclass
class BenchmarkTable:
    rows: list = field(default_factory=list)  # (n1_ratio, method, metric, median)
    failures: dict = field(default_factory=dict)  # n1_ratio -> [(replicate, message)]

    def median(self, n1_ratio, method, metric):
        for r, m, k, v in self.rows:
            if math.isclose(r, n1_ratio) and m == method and k == metric:
                return v
        raise KeyError((n1_ratio, method, metric))

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["n1_ratio", "method", "metric", "median"])
            for r, m, k, v in self.rows:
                wr.writerow([repr(float(r)), m, k, "NA" if np.isnan(v) else repr(float(v))])


def run_benchmark(config: SimConfig, n1_ratios=None, options: SolverOptions | None = None, workers: int = 1) -> BenchmarkTable:
    """Median metrics per method and masking ratio over ``config.replicates`` replicates.

    Replicate ``i`` uses seed ``config.seed + i`` for every ratio, so ratios
    differ only in which rows are masked. Results do not depend on ``workers``.
    """
    ratios = [config.n1_ratio] if n1_ratios is None else list(n1_ratios)
    table = BenchmarkTable()
    for ratio in ratios:
        cfg = replace(config, n1_ratio=ratio)
        tasks = [(cfg, i, options) for i in range(cfg.replicates)]
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_task, tasks))
        else:
            results = [_task(t) for t in tasks]
        results.sort(key=lambda r: r[0])
        fails = [(i, msg) for i, rep, msg in results if rep is None]
        for i, msg in fails:
            log.warning("ratio %.3g replicate %d failed: %s", ratio, i, msg)
        table.failures[ratio] = fails
        ok = [rep for _, rep, _ in results if rep is not None]
        for method in METHODS:
            for metric in METRICS:
                if method == "complete_only" and metric == "mse_v":
                    continue
                vals = [getattr(rep[method], metric) for rep in ok]
                med = float(np.median(vals)) if vals else float("nan")
                table.rows.append((ratio, method, metric, med))
        table.rows.append((ratio, "all", "failures", float(len(fails))))
    return table
