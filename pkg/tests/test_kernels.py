"""Compiled kernels against the numpy fallback and a plain-loop oracle."""
import importlib
import math
import os

import numpy as np
import pytest

from tailcluster import _kernels_py, kernels

try:
    cy = importlib.import_module("tailcluster._kernels")
except ImportError:  # pragma: no cover
    cy = None

BACKENDS = [_kernels_py] + ([cy] if cy is not None else [])


def loop_path_stats(x, alpha, tau, b, center):
    out = []
    for row in x:
        s = sum(v**alpha for v in row)
        bt = sum((b * v) ** tau for v in row if b * v >= 1)
        sup = max(row)
        arg = -1 if sup == 0 else list(row).index(sup)
        fe = next((i for i, v in enumerate(row) if v > 1), -1)
        after = max(row[center + 1 :], default=0.0)
        out.append((s, bt, sup, arg, fe, after, max(after, row[center])))
    return [np.array(c) for c in zip(*out)]


def random_norms(rng, n=200, p=15):
    x = rng.pareto(1.0, size=(n, p)) * (rng.random((n, p)) < 0.6)
    x[:5] = 0.0  # all-zero rows
    x[5:10, 3] = x[5:10, 7] = 4.0  # ties at the maximum
    x[10:15] = 1.0  # boundary of the strict exceedance
    return x


def test_compiled_backend_is_default():
    if cy is None:
        pytest.skip("compiled extension not built")
    if os.environ.get("TAILCLUSTER_PURE") == "1":
        pytest.skip("numpy fallback forced")
    assert kernels.BACKEND == "cython"


@pytest.mark.parametrize("mod", BACKENDS, ids=lambda m: m.BACKEND)
@pytest.mark.parametrize("alpha, tau, b", [(1.0, 0.0, 1.0), (2.0, 1.0, 1.0), (0.5, 2.0, 3.0)])
def test_path_stats_matches_loop_oracle(mod, alpha, tau, b):
    x = random_norms(np.random.default_rng(1))
    center = 7
    got = mod.path_stats(x, alpha, tau, b, center)
    want = loop_path_stats(x, alpha, tau, b, center)
    for g, w in zip(got, want):
        if np.asarray(w).dtype.kind == "i":
            assert np.array_equal(g, w)
        else:
            np.testing.assert_allclose(g, w, rtol=1e-12, atol=0)


@pytest.mark.skipif(cy is None, reason="compiled extension not built")
def test_backends_agree_on_path_stats():
    x = random_norms(np.random.default_rng(2), n=1000, p=65)
    a = _kernels_py.path_stats(x, 1.3, 0.7, 1.5, 32)
    c = cy.path_stats(x, 1.3, 0.7, 1.5, 32)
    for u, v in zip(a, c):
        np.testing.assert_allclose(u, v, rtol=1e-13, atol=0)
        assert u.dtype == v.dtype


def _dehaan_inputs(seed, n=300, t=16, k=3):
    rng = np.random.default_rng(seed)
    m = rng.random((n, k)) * (rng.random((n, 1)) < 0.7)
    gamma = rng.random(n) * 3
    incr = rng.standard_exponential((n, t))
    z = rng.pareto(1.0, size=(n, t, k)) * (rng.random((n, t, k)) < 0.5)
    thresh = np.full(n, 5.0)
    return m, gamma, incr, z, thresh


def loop_dehaan(m, gamma, incr, z, alpha, thresh):
    m, gamma = m.copy(), gamma.copy()
    stopped = np.zeros(len(m), bool)
    used = np.zeros(len(m), np.int64)
    for i in range(len(m)):
        for j in range(incr.shape[1]):
            gamma[i] += incr[i, j]
            m[i] = np.maximum(m[i], gamma[i] ** (-1 / alpha) * z[i, j])
            used[i] = j + 1
            mn = m[i].min()
            if mn > 0 and gamma[i] * mn**alpha > thresh[i]:
                stopped[i] = True
                break
    return m, gamma, stopped, used


@pytest.mark.parametrize("mod", BACKENDS, ids=lambda m: m.BACKEND)
@pytest.mark.parametrize("alpha", [1.0, 2.0])
def test_dehaan_update_matches_loop(mod, alpha):
    m, gamma, incr, z, thresh = _dehaan_inputs(3)
    m_ref, g_ref, s_ref, u_ref = loop_dehaan(m, gamma, incr, z, alpha, thresh)
    stopped, used = mod.dehaan_update(m, gamma, incr, z, alpha, thresh)
    assert np.array_equal(stopped, s_ref) and np.array_equal(used, u_ref)
    np.testing.assert_allclose(m, m_ref, rtol=1e-13)
    np.testing.assert_allclose(gamma, g_ref, rtol=1e-13)
    assert 0 < stopped.mean() < 1


def test_empty_window_row():
    x = np.zeros((2, 1))
    for mod in BACKENDS:
        s, bt, sup, arg, fe, after, frm = mod.path_stats(x, 1.0, 0.0, 1.0, 0)
        assert list(arg) == [-1, -1] and list(fe) == [-1, -1] and math.isclose(after[0], 0.0)
