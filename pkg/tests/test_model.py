import numpy as np
import pytest

from condmds.errors import (
    DimensionMismatch,
    DisconnectedWeights,
    NegativeDissimilarity,
    NegativeWeight,
    RankDeficientConditioning,
    ZeroDissimilarity,
)
from condmds.model import (
    InitStrategy,
    Problem,
    SolverOptions,
    is_connected,
    partition,
    permuted,
    sammon_weights,
    validate,
)


def _basic(n=5, q=1):
    rng = np.random.default_rng(0)
    x = rng.standard_normal((n, 2))
    d = np.sqrt(((x[:, None] - x[None]) ** 2).sum(-1))
    w = np.ones((n, n)) - np.eye(n)
    return d, w, rng.standard_normal((n, q))


def test_problem_is_read_only():
    d, w, v = _basic()
    prob = Problem(d, w, v, 2)
    with pytest.raises(ValueError):
        prob.delta_tilde[0, 1] = 3.0


def test_partition_puts_complete_rows_first_stably():
    d, w, v = _basic(6, 2)
    v[1, 0] = np.nan
    v[4] = np.nan
    part = partition(Problem(d, w, v, 2))
    assert part.permutation.tolist() == [0, 2, 3, 5, 1, 4]
    assert (part.n1, part.n2) == (4, 2)
    assert part.mask.tolist() == [[1, 0], [1, 1]]
    x = np.arange(6)
    assert np.array_equal(part.restore_rows(part.apply_rows(x)), x)
    m = np.arange(36).reshape(6, 6)
    assert np.array_equal(part.restore_square(part.apply_square(m)), m)


def test_permuted_problem_consistent():
    d, w, v = _basic(6, 1)
    v[2] = np.nan
    prob = Problem(d, w, v, 2)
    part = partition(prob)
    pp = permuted(prob, part)
    i, j = part.permutation[0], part.permutation[-1]
    assert pp.delta_tilde[0, -1] == prob.delta_tilde[i, j]


def test_validate_symmetrizes_by_average_and_sum():
    d, w, v = _basic()
    d2 = d.copy()
    d2[0, 1] += 1.0
    avg = validate(Problem(d2, w, v, 2)).delta_tilde
    assert avg[0, 1] == avg[1, 0] == pytest.approx(d[0, 1] + 0.5)
    tot = validate(Problem(d2, w, v, 2), symmetrize="sum").delta_tilde
    assert tot[0, 1] == pytest.approx(2 * d[0, 1] + 1.0)


def test_validate_missing_dissimilarity_uses_mirror_or_zero_weight():
    d, w, v = _basic()
    d = d.copy()
    d[0, 1] = np.nan
    out = validate(Problem(d, w, v, 2))
    assert out.delta_tilde[0, 1] == d[1, 0]
    d[1, 0] = np.nan
    out = validate(Problem(d, w, v, 2))
    assert out.weights[0, 1] == out.weights[1, 0] == 0


@pytest.mark.parametrize("exc,mutate", [
    (NegativeWeight, lambda d, w, v: w.__setitem__((0, 1), -1.0)),
    (NegativeDissimilarity, lambda d, w, v: d.__setitem__((0, 1), -1.0)),
])
def test_validate_rejects_negative(exc, mutate):
    d, w, v = _basic()
    d, w = d.copy(), w.copy()
    mutate(d, w, v)
    with pytest.raises(exc):
        validate(Problem(d, w, v, 2))


def test_validate_disconnected():
    d, w, v = _basic(6)
    w[:3, 3:] = 0
    w[3:, :3] = 0
    assert not is_connected(w)
    with pytest.raises(DisconnectedWeights):
        validate(Problem(d, w, v, 2))


def test_validate_dimension_mismatch():
    d, w, v = _basic()
    with pytest.raises(DimensionMismatch):
        validate(Problem(d, w[:4, :4], v, 2))


def test_rank_deficient_conditioning():
    d, w, v = _basic(5, 2)
    v[:, 1] = 2 * v[:, 0]
    with pytest.raises(RankDeficientConditioning):
        validate(Problem(d, w, v, 2))
    v = np.full((5, 1), np.nan)
    v[0] = 1.0
    with pytest.raises(RankDeficientConditioning):
        validate(Problem(d, w, v, 2))


def test_equal_weights_detection():
    d, w, v = _basic()
    assert Problem(d, w, v, 2).equal_weights
    w2 = w.copy()
    w2[0, 1] = w2[1, 0] = 2.0
    assert not Problem(d, w2, v, 2).equal_weights


def test_sammon_weights():
    d, _, _ = _basic()
    w = sammon_weights(d)
    total = np.triu(d, 1).sum()
    assert w[0, 1] == pytest.approx(1 / (d[0, 1] * total))
    assert np.all(np.diag(w) == 0)
    d[0, 1] = d[1, 0] = 0
    with pytest.raises(ZeroDissimilarity):
        sammon_weights(d)


def test_solver_options_validation():
    assert SolverOptions(init="naive").init is InitStrategy.NAIVE
    for bad in ({"gamma": -1}, {"l_max": 0}, {"restarts": 0}, {"seed": -1}):
        with pytest.raises(ValueError):
            SolverOptions(**bad)
