"""Conditional multidimensional scaling with incomplete conditioning data."""

from .errors import *  # noqa: F401,F403
from .evaluation import ImputedConditioning, ReplicateReport, acc, impute, mse_b, mse_v, procrustes_statistic
from .initializers import InitState, closed_form_init, complete_smacof_init, make_init, naive_init
from .model import (
    InitStrategy,
    Partition,
    Problem,
    Solution,
    SolverOptions,
    partition,
    sammon_weights,
    validate,
)
from .simbench import SimConfig, evaluate_replicate, gen_replicate, run_benchmark
from .solver import fit, run_complete, run_configured, run_missing, run_multistart

__version__ = "0.1.0"
