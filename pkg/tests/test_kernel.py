import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from condmds import kernel
from condmds.errors import DegenerateDissimilarities, SingularShiftedH


def _loop_stress(delta, w, u, v):
    n = len(delta)
    total = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            d = np.sqrt(np.sum((u[i] - u[j]) ** 2) + np.sum((v[i] - v[j]) ** 2))
            total += w[i, j] * (delta[i, j] - d) ** 2
    return total


def _sym(rng, n, lo=0.1, hi=2.0):
    a = rng.uniform(lo, hi, (n, n))
    a = 0.5 * (a + a.T)
    np.fill_diagonal(a, 0)
    return a


def test_distances_match_concatenation(rng):
    u, v = rng.standard_normal((7, 2)), rng.standard_normal((7, 3))
    z = np.hstack([u, v])
    d = kernel.distances(u, v)
    assert d[2, 5] == pytest.approx(np.linalg.norm(z[2] - z[5]))
    assert kernel.joint_distance(u, v, 2, 5) == pytest.approx(d[2, 5])


def test_stress_matches_loop(rng):
    n = 9
    delta, w = _sym(rng, n), _sym(rng, n)
    u, v = rng.standard_normal((n, 2)), rng.standard_normal((n, 1))
    assert kernel.conditional_stress(delta, w, u, v) == pytest.approx(_loop_stress(delta, w, u, v), rel=1e-12)
    assert kernel.normalized_stress(delta, w, u, v) == pytest.approx(
        _loop_stress(delta, w, u, v) / np.triu(w * delta**2, 1).sum())


def test_normalized_stress_degenerate():
    z = np.zeros((3, 3))
    with pytest.raises(DegenerateDissimilarities):
        kernel.normalized_stress(z, np.ones((3, 3)), np.zeros((3, 1)), np.zeros((3, 1)))


def test_embed_conditioning():
    v1 = np.array([[1.0, 2.0], [3.0, 4.0]])
    b = np.array([[1.0, 0.0], [0.0, 2.0]])
    out = kernel.embed_conditioning(v1, b, np.array([[9.0, 9.0]]))
    assert out.tolist() == [[1, 4], [3, 8], [9, 9]]


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 15), st.integers(0, 10_000))
def test_pseudoinverse_matches_pinv(n, seed):
    rng = np.random.default_rng(seed)
    w = _sym(rng, n)
    sm = kernel.build_h(w)
    h = sm.h
    assert np.allclose(h.sum(axis=1), 0, atol=1e-12)
    assert np.allclose(sm.h_pinv, np.linalg.pinv(h), atol=1e-9)
    assert np.allclose(h @ sm.h_pinv @ h, h, atol=1e-8)
    assert np.allclose(sm.h_pinv @ h @ sm.h_pinv, sm.h_pinv, atol=1e-8)


def test_equal_weight_pseudoinverse_closed_form():
    n = 8
    w = np.ones((n, n)) - np.eye(n)
    sm = kernel.build_h(w)
    assert np.allclose(sm.h_pinv, (np.eye(n) - 1.0 / n) / n, atol=1e-15)


def test_build_h_disconnected():
    w = np.zeros((4, 4))
    w[0, 1] = w[1, 0] = w[2, 3] = w[3, 2] = 1
    with pytest.raises(SingularShiftedH):
        kernel.build_h(w)


def test_blocks(rng):
    w = _sym(rng, 6)
    sm = kernel.build_h(w, 4)
    assert sm.h11.shape == (4, 4) and sm.h12.shape == (4, 2) and sm.h22.shape == (2, 2)
    assert np.array_equal(sm.h21, sm.h12.T)


def test_coefficient_matrix(rng):
    n = 8
    delta, w = _sym(rng, n), _sym(rng, n)
    u, v = rng.standard_normal((n, 2)), rng.standard_normal((n, 1))
    u[3] = u[1]
    v[3] = v[1]  # coincident points get a zero coefficient
    cm = kernel.build_c(delta, w, u, v, 5)
    d = kernel.distances(u, v)
    assert np.allclose(cm.c.sum(axis=1), 0, atol=1e-12)
    assert cm.c[1, 3] == 0
    assert cm.c[0, 2] == pytest.approx(-w[0, 2] * delta[0, 2] / d[0, 2])
    assert cm.c11.shape == (5, 5) and cm.c22.shape == (3, 3)


def test_majorization_inequality(rng):
    # tr Z'C(Y)Y bounds sum w delta d(Z) from below (Cauchy-Schwarz), equality at Z=Y.
    n = 10
    delta, w = _sym(rng, n), _sym(rng, n)
    y = rng.standard_normal((n, 3))
    z = rng.standard_normal((n, 3))
    c = kernel.build_c(delta, w, y[:, :2], y[:, 2:]).c
    lhs = np.triu(w * delta * kernel.distances(z[:, :2], z[:, 2:]), 1).sum()
    assert np.trace(z.T @ c @ y) <= lhs + 1e-10
    at_y = np.triu(w * delta * kernel.distances(y[:, :2], y[:, 2:]), 1).sum()
    assert np.trace(y.T @ c @ y) == pytest.approx(at_y)


@pytest.mark.parametrize("unit", [True, False])
def test_sweep_matches_dense(rng, unit, monkeypatch):
    n = 23
    delta = _sym(rng, n)
    w = np.ones((n, n)) - np.eye(n) if unit else _sym(rng, n)
    z = rng.standard_normal((n, 4))
    z[7] = z[2]
    m = rng.standard_normal((n, 3))
    obj = kernel.Objective(delta, w)
    monkeypatch.setattr(kernel.Objective, "BLOCK_BYTES", 8 * n * 5)  # several blocks, ragged last one
    sigma, cm = obj.sweep(z, m)
    c = kernel.build_c(delta, w, z[:, :2], z[:, 2:]).c
    assert sigma == pytest.approx(kernel.normalized_stress(delta, w, z[:, :2], z[:, 2:]), rel=1e-12)
    assert np.allclose(cm, c @ m, rtol=1e-12, atol=1e-12)
