"""Stationary max-stable fields from a representer.

``X(t) = max_i Gamma_i^{-1/alpha} Z_i(t)`` with ``Gamma_i`` the arrivals of
a unit-rate Poisson process.  The series is truncated per sample as soon as
no future term can (or, with the Markov rule, is likely to) raise the
smallest running maximum:

* exact rule, when ``sup_t ||Z(t)||^alpha <= C`` almost surely: stop at the
  first term with ``Gamma * m_min^alpha > C``;
* Markov rule otherwise: stop when ``C_hat / (Gamma * m_min^alpha) <
  epsilon``, with ``C_hat`` a pilot estimate of ``E sup_t ||Z(t)||^alpha``.

Three representers are available.  ``"raw"`` draws the model's ``Z``.
``"spectral"`` uses ``Theta(t - T) (k / sum_s ||Theta(s - T)||^alpha)^{1/alpha}``
with ``T`` uniform on the ``k`` evaluation points; it has the same
finite-dimensional exponent measure on those points and is bounded by ``k``.
``"rosinski"`` uses ``B^N Q / p_N(N)^{1/alpha}`` built from a cluster field.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import stats as sps

from . import kernels
from .cluster import REJECTION_METHODS, ClusterConstructionSpec, construct_Q_batch
from .errors import ConfigurationError, TruncationWarning
from .field import Window
from .lattice import covolume
from .models import (
    ModelSpec,
    ShiftDistribution,
    cluster_table,
    decay_radius,
    resolve_shift,
    sample_Theta_batch,
    sample_Z_batch,
    validate_dissipative,
)
from .rng import RandomStream, purpose_key, run_blocks

__all__ = [
    "MaxStableSampleSpec",
    "Representer",
    "make_representer",
    "dehaan_sample",
    "rosinski_sample",
    "fidi_neglog",
    "empirical_neglog_cdf",
    "frechet_ks",
]

TERM_CHUNK = 32


@dataclass(frozen=True)
class MaxStableSampleSpec:
    """What to simulate.

    Parameters
    ----------
    model : ModelSpec
    points : tuple of tuple of int
        Evaluation points (grid units).
    representation : str
        ``"dehaan"`` or ``"rosinski"``.
    stopping_epsilon : float
        Markov-rule tolerance in ``(0, 0.1]``.
    shift_dist : ShiftDistribution
        Law of ``N`` for the Rosinski representer; its box is sized
        automatically unless ``half_width`` is set.
    construction : ClusterConstructionSpec
        Cluster used by the Rosinski representer.
    representer : str
        ``"raw"`` or ``"spectral"`` for de Haan sampling.
    q_half_width : int or None
        Window of the Rosinski cluster draws (default: 20 for
        Brown-Resnick, twice the cluster radius plus 2 otherwise).
    max_terms : int
        Per-sample term budget.
    pilot_n : int
        Pilot draws used for the Markov constant.
    stopping : str
        ``"auto"`` uses the exact rule whenever the representer has an
        almost sure bound; ``"markov"`` forces the Markov rule.
    """

    model: ModelSpec
    points: tuple
    representation: str = "dehaan"
    stopping_epsilon: float = 0.01
    shift_dist: ShiftDistribution = field(default_factory=ShiftDistribution)
    construction: ClusterConstructionSpec = field(default_factory=ClusterConstructionSpec)
    representer: str = "raw"
    q_half_width: int | None = None
    max_terms: int = 200_000
    pilot_n: int = 4000
    stopping: str = "auto"

    def __post_init__(self) -> None:
        pts = tuple((int(p),) if np.isscalar(p) else tuple(int(v) for v in p) for p in self.points)
        if not pts:
            raise ConfigurationError("at least one evaluation point is required")
        if any(len(p) != self.model.dim_l for p in pts):
            raise ConfigurationError("evaluation points must match the model dimension")
        object.__setattr__(self, "points", pts)
        if not (0 < self.stopping_epsilon <= 0.1):
            raise ConfigurationError("stopping_epsilon must lie in (0, 0.1]")
        if self.representation not in ("dehaan", "rosinski"):
            raise ConfigurationError("representation must be 'dehaan' or 'rosinski'")
        if self.representer not in ("raw", "spectral"):
            raise ConfigurationError("representer must be 'raw' or 'spectral'")
        if self.stopping not in ("auto", "markov"):
            raise ConfigurationError("stopping must be 'auto' or 'markov'")
        if self.max_terms < 1 or self.pilot_n < 2:
            raise ConfigurationError("max_terms >= 1 and pilot_n >= 2 required")


@dataclass
class Representer:
    """Draws ``||Z(t_i)||`` at the evaluation points, shape ``(count, k)``.

    ``bound`` is an almost sure bound of ``max_i ||Z(t_i)||^alpha`` or None.
    """

    draw: Callable[[int, np.random.Generator], np.ndarray]
    k: int
    bound: float | None
    label: str
    info: dict = field(default_factory=dict)


def _pts(points) -> np.ndarray:
    return np.array(points, dtype=np.int64).reshape(len(points), -1)


def _raw_representer(model: ModelSpec, points) -> Representer:
    pts = _pts(points)
    r = decay_radius(model)
    a = int(np.abs(pts).max()) + 2 * r
    win = Window.cube(max(a, 1), model.dim_l, model.grid_spacing)
    idx = win.index_of(pts)

    def draw(count, rng):
        zb = sample_Z_batch(model, win, count, rng)
        return model.norm(zb.values[:, idx])

    bound = None
    if model.is_discrete_cluster:
        _, vals = cluster_table(model)
        sd = resolve_shift(model, win)
        dens = sd.density(model.dim_l, model.grid_spacing)
        bound = float(np.max(model.norm(vals)) ** model.alpha / dens.min())
    return Representer(draw, len(pts), bound, "raw", {"window": list(win.half_width)})


def _spectral_representer(model: ModelSpec, points) -> Representer:
    pts = _pts(points)
    k = len(pts)
    diffs = (pts[:, None, :] - pts[None, :, :]).reshape(-1, pts.shape[1])
    a = max(int(np.abs(diffs).max()), 1)
    win = Window.cube(a, model.dim_l, model.grid_spacing)
    # idx[T, i] = flat index of t_i - t_T
    idx = win.index_of(diffs).reshape(k, k).T
    alpha = model.alpha

    def draw(count, rng):
        tb = sample_Theta_batch(model, win, count, rng)
        x = model.norm(tb.values)  # (count, P)
        T = rng.integers(0, k, size=count)
        vals = x[np.arange(count)[:, None], idx[T]]  # (count, k)
        s = np.sum(vals**alpha, axis=1)
        w = tb.weight
        return vals * ((w * k / s) ** (1.0 / alpha))[:, None]

    # exact spectral samplers have unit weights, so every value is <= k
    return Representer(draw, k, float(k), "spectral", {"window": list(win.half_width)})


def _rosinski_representer(spec: MaxStableSampleSpec) -> Representer:
    model = spec.model
    if model.kind == "brown_resnick" and not validate_dissipative(model):
        raise ConfigurationError("Rosinski representation requires a purely dissipative model")
    cons = spec.construction
    if cons.method in REJECTION_METHODS:
        raise ConfigurationError("rejection constructions carry an unknown normalizing constant; use a norm_* construction")
    if cons.uses_rejection:
        raise ConfigurationError("conditional norm_y cannot feed the Rosinski representer")
    pts = _pts(spec.points)
    r = decay_radius(model)
    aq = spec.q_half_width if spec.q_half_width is not None else (20 if model.kind == "brown_resnick" else 2 * r + 2)
    qwin = Window.cube(aq, model.dim_l, model.grid_spacing)
    s = aq + int(np.abs(pts).max())
    sd = spec.shift_dist if spec.shift_dist.half_width is not None else spec.shift_dist.with_half_width(s)
    box = sd.support(model.dim_l)
    dens = sd.density(model.dim_l, model.grid_spacing)
    cdf = np.cumsum(dens) / np.sum(dens)
    alpha = model.alpha

    def draw(count, rng):
        qb = construct_Q_batch(cons, model, qwin, count, rng)
        x = model.norm(qb.values) * (qb.weight ** (1.0 / alpha))[:, None]
        kk = np.minimum(np.searchsorted(cdf, rng.random(count), side="right"), len(cdf) - 1)
        n_vec = box[kk]
        out = np.zeros((count, len(pts)))
        for i, t in enumerate(pts):
            j = qwin.index_of(t[None, :] - n_vec)
            ok = j >= 0
            out[ok, i] = x[np.flatnonzero(ok), j[ok]]
        return out * (dens[kk] ** (-1.0 / alpha))[:, None]

    bound = None
    lat_ambient = cons.lattice is None or cons.lattice.is_identity
    if lat_ambient and cons.method in ("norm_theta", "norm_y"):
        delta = covolume(cons.lattice) if cons.lattice is not None else model.grid_spacing**model.dim_l
        q_sup = (cons.b**alpha if cons.method == "norm_y" else 1.0) / delta
        bound = q_sup / float(dens.min())
    info = {"q_half_width": aq, "shift": sd.kind, "shift_half_width": sd.half_width, "construction": cons.method}
    return Representer(draw, len(pts), bound, "rosinski", info)


def make_representer(spec: MaxStableSampleSpec) -> Representer:
    if spec.representation == "rosinski":
        return _rosinski_representer(spec)
    if spec.representer == "spectral":
        return _spectral_representer(spec.model, spec.points)
    return _raw_representer(spec.model, spec.points)


def _pilot_constant(rep: Representer, alpha: float, n: int, stream: RandomStream) -> float:
    z = rep.draw(n, stream.child("pilot").generator())
    v = np.max(z, axis=1) ** alpha
    return float(v.mean() + 3.0 * v.std(ddof=1) / math.sqrt(n))


def _simulate(spec: MaxStableSampleSpec, rep: Representer, n: int, seed: int, threads: int) -> tuple[np.ndarray, dict]:
    alpha = spec.model.alpha
    key = purpose_key("maxstable", spec.representation, rep.label, spec.points, spec.stopping_epsilon, spec.stopping)
    stream = RandomStream(seed, 0, key)
    if rep.bound is not None and spec.stopping == "auto":
        thresh_value, mode = rep.bound, "exact"
    else:
        thresh_value, mode = _pilot_constant(rep, alpha, spec.pilot_n, stream) / spec.stopping_epsilon, "markov"

    def block(_b, count, rng):
        m = np.zeros((count, rep.k))
        gamma = np.zeros(count)
        terms = np.zeros(count, dtype=np.int64)
        active = np.arange(count)
        while len(active):
            na = len(active)
            incr = rng.standard_exponential((na, TERM_CHUNK))
            z = rep.draw(na * TERM_CHUNK, rng).reshape(na, TERM_CHUNK, rep.k)
            mm = np.ascontiguousarray(m[active])
            gg = np.ascontiguousarray(gamma[active])
            stopped, used = kernels.dehaan_update(mm, gg, incr, z, alpha, np.full(na, thresh_value))
            m[active] = mm
            gamma[active] = gg
            terms[active] += used
            over = terms[active] >= spec.max_terms
            active = active[~(stopped | over)]
        return m, gamma, terms

    parts = run_blocks(block, n, stream, threads)
    x = np.concatenate([p[0] for p in parts])
    gamma = np.concatenate([p[1] for p in parts])
    terms = np.concatenate([p[2] for p in parts])
    mmin = x.min(axis=1)
    with np.errstate(divide="ignore"):
        achieved = np.where(mmin > 0, (thresh_value * (spec.stopping_epsilon if mode == "markov" else 1.0)) / (gamma * mmin**alpha), np.inf)
    truncated = int(np.sum(terms >= spec.max_terms))
    diag = {
        "stopping_rule": mode,
        "bound": thresh_value if mode == "exact" else thresh_value * spec.stopping_epsilon,
        "mean_terms": float(terms.mean()),
        "max_terms": int(terms.max()),
        "truncated_samples": truncated,
        "representer": rep.label,
        **rep.info,
    }
    if mode == "markov":
        diag["max_achieved_epsilon"] = float(np.max(achieved))
    if truncated:
        diag["achieved_epsilon_worst"] = float(np.max(achieved))
        warnings.warn(f"{truncated} samples hit the term budget", TruncationWarning, stacklevel=3)
    return x, diag


def dehaan_sample(spec: MaxStableSampleSpec, n: int, seed: int, threads: int = 1, return_diagnostics: bool = False):
    """``n`` draws of ``X`` at the spec's points via the de Haan series.

    Returns
    -------
    ndarray, shape (n, k)
        Field values; with ``return_diagnostics`` also a dict describing the
        stopping rule, the bound used and term counts.
    """
    if spec.representation != "dehaan":
        spec = MaxStableSampleSpec(**{**spec.__dict__, "representation": "dehaan"})
    x, diag = _simulate(spec, make_representer(spec), n, seed, threads)
    return (x, diag) if return_diagnostics else x


def rosinski_sample(spec: MaxStableSampleSpec, n: int, seed: int, threads: int = 1, return_diagnostics: bool = False):
    """Mixed-moving-maxima draws: the de Haan engine fed with ``Z_N``."""
    if spec.representation != "rosinski":
        spec = MaxStableSampleSpec(**{**spec.__dict__, "representation": "rosinski"})
    x, diag = _simulate(spec, make_representer(spec), n, seed, threads)
    return (x, diag) if return_diagnostics else x


def fidi_neglog(
    model: ModelSpec,
    points: Sequence,
    levels,
    n: int,
    seed: int,
    representer: str = "raw",
) -> tuple[np.ndarray, np.ndarray]:
    """Monte Carlo ``E[ max_i x_i^{-alpha} ||Z(t_i)||^alpha ]``.

    Parameters
    ----------
    levels : array_like, shape (k,) or (m, k)
        One or several level vectors; all use the same draws.

    Returns
    -------
    value, stderr : ndarray
        Shape ``(m,)`` (a scalar array for a single level vector).
    """
    spec = MaxStableSampleSpec(model, tuple(points), representer=representer)
    lv = np.atleast_2d(np.asarray(levels, dtype=np.float64))
    if lv.shape[1] != len(spec.points) or np.any(lv <= 0):
        raise ConfigurationError("levels must be positive with one entry per point")
    rep = make_representer(spec)
    stream = RandomStream(seed, 0, purpose_key("fidi", representer, spec.points))
    a = model.alpha

    def block(_b, count, rng):
        z = rep.draw(count, rng)
        v = np.max(z[:, None, :] ** a * lv[None, :, :] ** (-a), axis=2)  # (count, m)
        return v.sum(axis=0), (v * v).sum(axis=0), count

    parts = run_blocks(block, n, stream)
    s = sum(p[0] for p in parts)
    ss = sum(p[1] for p in parts)
    mean = s / n
    var = np.maximum(ss / n - mean**2, 0.0) * n / max(n - 1, 1)
    se = np.sqrt(var / n)
    if np.ndim(levels) == 1:
        return mean[0], se[0]
    return mean, se


def empirical_neglog_cdf(x: np.ndarray, levels) -> tuple[np.ndarray, np.ndarray]:
    """``-ln`` of the empirical joint CDF and its delta-method stderr."""
    lv = np.atleast_2d(np.asarray(levels, dtype=np.float64))
    n = len(x)
    p = np.array([np.mean(np.all(x <= row[None, :], axis=1)) for row in lv])
    with np.errstate(divide="ignore"):
        val = -np.log(p)
        se = np.sqrt((1.0 - p) / (n * p))
    return val, se


def frechet_ks(sample: np.ndarray, alpha: float) -> float:
    """KS distance to the Frechet law ``exp(-x^{-alpha})``."""
    return float(sps.kstest(sample, lambda s: np.exp(-np.maximum(s, 1e-300) ** (-alpha))).statistic)
