"""Pure numpy implementation of the hot kernels.

Semantics match ``_kernels.pyx`` exactly; this module is used whenever the
compiled extension is missing or ``TAILCLUSTER_PURE=1`` is set.
"""
from __future__ import annotations

import numpy as np

BACKEND = "numpy"


def path_stats(x, alpha, tau, b, center):
    """Fused per-row path functionals of a nonnegative norm array.

    Parameters
    ----------
    x : ndarray, shape (n, P)
        Norms ``||f(t)||`` in lexicographic window order.  Points outside the
        lattice or outside coverage must already be zero.
    alpha, tau, b : float
        Exponent of the sum, exceedance exponent and threshold scale.
    center : int
        Flat index of the origin.

    Returns
    -------
    tuple of ndarray
        ``(s_alpha, b_tau, sup, argsup, first_exc, sup_after, sup_from)``.
        ``b_tau`` is the sum of ``(b x)^tau`` over points with ``b x >= 1``;
        ``argsup`` and ``first_exc`` are flat indices or ``-1``;
        ``sup_after`` is the max over indices strictly after ``center``.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    n, p = x.shape
    s_alpha = np.power(x, alpha).sum(axis=1) if p else np.zeros(n)
    bx = b * x
    exc = bx >= 1.0
    b_tau = np.where(exc, np.power(np.where(exc, bx, 1.0), tau), 0.0).sum(axis=1)
    sup = x.max(axis=1) if p else np.zeros(n)
    argsup = np.where(sup > 0, np.argmax(x, axis=1), -1).astype(np.int64)
    over = x > 1.0
    first_exc = np.where(over.any(axis=1), np.argmax(over, axis=1), -1).astype(np.int64)
    if center + 1 < p:
        sup_after = x[:, center + 1 :].max(axis=1)
    else:
        sup_after = np.zeros(n)
    sup_from = np.maximum(sup_after, x[:, center])
    return s_alpha, b_tau, sup, argsup, first_exc, sup_after, sup_from


def dehaan_update(m, gamma, incr, z, alpha, thresh):
    """Advance the de Haan series by one block of terms, in place.

    Parameters
    ----------
    m : ndarray, shape (n, k)
        Running maxima, updated in place.
    gamma : ndarray, shape (n,)
        Current Poisson arrival, updated in place.
    incr : ndarray, shape (n, T)
        Unit exponential increments.
    z : ndarray, shape (n, T, k)
        Representer norms at the evaluation points.
    alpha : float
    thresh : ndarray, shape (n,)
        A row stops after the first term with ``Gamma * min(m)**alpha > thresh``.

    Returns
    -------
    stopped : ndarray of bool, shape (n,)
    used : ndarray of int64, shape (n,)
        Number of terms consumed from this block.
    """
    n, t = incr.shape
    g = np.cumsum(np.concatenate([gamma[:, None], incr], axis=1), axis=1)[:, 1:]
    contrib = np.power(g, -1.0 / alpha)[:, :, None] * z
    run = np.maximum.accumulate(np.concatenate([m[:, None, :], contrib], axis=1), axis=1)[:, 1:]
    mmin = run.min(axis=2)
    cond = (mmin > 0) & (g * np.power(mmin, alpha) > thresh[:, None])
    stopped = cond.any(axis=1)
    j = np.where(stopped, np.argmax(cond, axis=1), t - 1)
    rows = np.arange(n)
    m[...] = run[rows, j]
    gamma[...] = g[rows, j]
    return stopped, (j + 1).astype(np.int64)
