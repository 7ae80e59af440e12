"""Command-line interface: ``condmds fit | impute | simulate | bench``.

Exit codes: 0 on success, 2 for invalid input, 3 for numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from . import io
from .errors import CondMDSError, NumericalError, SingularB, ValidationError
from .evaluation import impute
from .model import InitStrategy, Problem, SolverOptions, partition, sammon_weights, validate
from .simbench import FEATURES, N_KNOWN, SimConfig, gen_replicate, run_benchmark
from .solver import run_multistart

log = logging.getLogger("condmds")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


def _init_choice(text):
    return InitStrategy(text.replace("-", "_"))


def _solver_options(args):
    return SolverOptions(
        gamma=args.gamma,
        l_max=args.max_iter,
        seed=args.seed,
        init=args.init,
        restarts=args.restarts,
        force_general_path=args.force_general_path,
    )


def _load_problem(args):
    dt = io.load_dissimilarity(args.delta)
    cond = io.load_conditioning(args.cond, args.cond_columns)
    labels = dt.row_labels
    cond = io.align_rows(cond, labels)
    n = dt.values.shape[0]
    if cond.values.shape[0] != n:
        raise ValidationError(f"conditioning has {cond.values.shape[0]} rows, dissimilarities have {n}")
    if args.weights:
        wt = io.load_dissimilarity(args.weights)
        w = np.nan_to_num(wt.values, nan=0.0)
    else:
        w = np.ones((n, n))
        np.fill_diagonal(w, 0.0)
    problem = validate(Problem(dt.values, w, cond.values, args.p), symmetrize=args.symmetrize, check_rank=False)
    if args.sammon:
        problem = Problem(problem.delta_tilde, sammon_weights(problem.delta_tilde), problem.conditioning, problem.p)
    problem = validate(problem, symmetrize=args.symmetrize)
    return problem, labels, cond


def fit_result(problem, sol, options, labels=None, cond_labels=None, symmetrize="avg"):
    """JSON-ready record of a fit; rows of ``u`` and ``imputed`` follow input order."""
    part = sol.partition or partition(problem)
    imputed, note = None, None
    if part.n2:
        observed = problem.conditioning[part.incomplete_rows]
        try:
            v2_hat = impute(observed, part.mask, sol.v2_tilde, sol.b).v2_hat
            full = np.array(problem.conditioning, dtype=float)
            full[part.incomplete_rows] = v2_hat
            imputed = full
        except SingularB as exc:
            note = f"SingularB: {exc}"
    else:
        imputed = np.array(problem.conditioning, dtype=float)
    fast = bool(part.n2 > 0 and problem.equal_weights and not options.force_general_path)
    return {
        "labels": None if labels is None else list(labels),
        "conditioning_columns": None if cond_labels is None else list(cond_labels),
        "n": problem.n,
        "p": problem.p,
        "q": problem.q,
        "u": sol.u,
        "b": sol.b,
        "incomplete_rows": part.incomplete_rows,
        "v2_tilde": sol.v2_tilde,
        "imputed_conditioning": imputed,
        "imputation_note": note,
        "normalized_stress": sol.normalized_stress,
        "stress_trace": list(sol.stress_trace),
        "iterations": sol.iterations,
        "converged": sol.converged,
        "fast_path": fast,
        "options": {
            "gamma": options.gamma,
            "max_iter": options.l_max,
            "init": options.init.value,
            "restarts": options.restarts,
            "force_general_path": options.force_general_path,
            "symmetrize": symmetrize,
        },
        "seed": options.seed,
    }


def cmd_fit(args):
    options = _solver_options(args)
    problem, labels, cond = _load_problem(args)
    sol = run_multistart(problem, partition(problem), options)
    log.info("normalized stress %.6g after %d iterations", sol.normalized_stress, sol.iterations)
    io.write_json(args.out, fit_result(problem, sol, options, labels, cond.col_labels, args.symmetrize))
    return EXIT_OK


def cmd_impute(args):
    res = io.read_json(args.fit)
    cond = io.load_conditioning(args.cond, args.cond_columns)
    cond = io.align_rows(cond, res.get("labels"))
    values = cond.values
    rows = np.asarray(res["incomplete_rows"], dtype=int)
    b = np.asarray(res["b"], dtype=float)
    if values.shape != (res["n"], res["q"]):
        raise ValidationError(f"conditioning is {values.shape}, fit expects ({res['n']}, {res['q']})")
    if not np.array_equal(np.flatnonzero(np.isnan(values).any(axis=1)), rows):
        raise ValidationError("missing pattern differs from the one the fit was made with")
    out = values.copy()
    if rows.size:
        v2t = np.asarray(res["v2_tilde"], dtype=float).reshape(rows.size, -1)
        mask = np.isnan(values[rows])
        out[rows] = impute(values[rows], mask, v2t, b).v2_hat
    io.write_table(args.out, out, cond.row_labels, cond.col_labels)
    return EXIT_OK


def _sim_config(args):
    return SimConfig(
        n=args.n,
        n1_ratio=args.n1_ratio,
        zeta1=args.zeta1,
        zeta2=args.zeta2,
        weight_mode=args.weight_mode,
        replicates=args.replicates,
        seed=args.seed,
    )


def cmd_simulate(args):
    config = _sim_config(args)
    os.makedirs(args.out, exist_ok=True)
    labels = [f"obj{i + 1}" for i in range(config.n)]
    for r in range(config.replicates):
        problem, truth = gen_replicate(config, r)
        target = args.out if config.replicates == 1 else os.path.join(args.out, f"rep{r:04d}")
        os.makedirs(target, exist_ok=True)
        io.write_table(os.path.join(target, "delta.csv"), problem.delta_tilde, labels, labels)
        io.write_table(os.path.join(target, "conditioning.csv"), problem.conditioning, labels, FEATURES[:N_KNOWN])
        io.write_json(os.path.join(target, "truth.json"), {
            "features": list(FEATURES),
            "feature_values": truth.features,
            "feature_weights": truth.feature_weights,
            "masked_rows": truth.masked_rows,
            "u": truth.u,
            "b": truth.b,
            "config": {k: getattr(config, k) for k in ("n", "n1_ratio", "zeta1", "zeta2", "weight_mode", "seed")},
            "replicate": r,
        })
    return EXIT_OK


def cmd_bench(args):
    config = _sim_config(args)
    ratios = args.ratios or [config.n1_ratio]
    for r in ratios:
        SimConfig(n=config.n, n1_ratio=r)
    options = SolverOptions(gamma=args.gamma, l_max=args.max_iter)
    table = run_benchmark(config, ratios, options, workers=args.workers)
    table.write_csv(args.out)
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(prog="condmds", description="Conditional MDS with incomplete conditioning data.")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fit", help="fit a configuration and impute missing conditioning values")
    f.add_argument("--delta", required=True, help="dissimilarity CSV")
    f.add_argument("--cond", required=True, help="conditioning CSV, NA for missing")
    f.add_argument("--cond-columns", nargs="+", help="columns of --cond to use (names or 0-based indices)")
    f.add_argument("--p", type=int, required=True, help="dimension of the free configuration")
    wg = f.add_mutually_exclusive_group()
    wg.add_argument("--weights", help="weight CSV (default: unit weights)")
    wg.add_argument("--sammon", action="store_true", help="use Sammon weights")
    f.add_argument("--gamma", type=float, default=1e-6, help="stop when stress decreases by at most this much")
    f.add_argument("--max-iter", type=int, default=1000)
    f.add_argument("--init", type=_init_choice, default=InitStrategy.CLOSED_FORM,
                   help="naive, closed-form or complete-smacof (default closed-form)")
    f.add_argument("--restarts", type=int, default=1)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--force-general-path", action="store_true")
    f.add_argument("--symmetrize", choices=("avg", "sum"), default="avg")
    f.add_argument("--out", required=True, help="output JSON")
    f.set_defaults(func=cmd_fit)

    i = sub.add_parser("impute", help="fill missing conditioning values from a saved fit")
    i.add_argument("--fit", required=True, help="JSON written by 'fit'")
    i.add_argument("--cond", required=True)
    i.add_argument("--cond-columns", nargs="+")
    i.add_argument("--out", required=True, help="output CSV")
    i.set_defaults(func=cmd_impute)

    for name, func, helptext in (("simulate", cmd_simulate, "write simulated car-brand data"),
                                 ("bench", cmd_bench, "median metrics over simulated replicates")):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("--n", type=int, default=100)
        s.add_argument("--n1-ratio", type=float, default=0.5)
        s.add_argument("--zeta1", type=float, default=0.2)
        s.add_argument("--zeta2", type=float, default=0.05)
        s.add_argument("--weight-mode", choices=("consumer_reports", "random_uniform"), default="consumer_reports")
        s.add_argument("--replicates", type=int, default=1 if name == "simulate" else 100)
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--out", required=True)
        s.set_defaults(func=func)
        if name == "bench":
            s.add_argument("--ratios", type=float, nargs="+", help="n1 ratios to sweep")
            s.add_argument("--gamma", type=float, default=1e-6)
            s.add_argument("--max-iter", type=int, default=1000)
            s.add_argument("--workers", type=int, default=1)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_INPUT
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (CondMDSError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
