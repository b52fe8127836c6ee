"""Cluster field constructions and the random-shift representation.

Every construction returns a :class:`~tailcluster.models.Batch` whose
``weight`` and ``attempts`` arrays define an unnormalized mass: for any
functional ``H`` the cluster expectation is estimated by

    sum_i weight_i * H(Q_i) / sum_i attempts_i .

Exact constructions have ``attempts = 1``.  Rejection constructions
(``involution_theta``, ``anchor_y``, ``involution_z`` and the conditional
``norm_y`` mode) only return accepted draws
and record how many candidates each acceptance consumed; this turns the
unknown acceptance probability in their normalizing constant into a ratio
estimate without ever storing rejected fields.

Draws on which a construction's formula gives the zero field (``norm_z``
when ``Z(0) = 0``, the non-conditional ``norm_y`` and ``norm_tilted_y`` when
``M_L(Y) <= b``) are kept with weight 0, so every positive-weight draw has
a positive supremum.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigurationError, ContractViolation, DegenerateConditioningError, TruncationWarning
from .field import FieldSample, Window, path_stats, restricted_norms, shift_batch
from .lattice import LatticeSpec, covolume
from .models import (
    Batch,
    ModelSpec,
    ShiftDistribution,
    WeightedDraw,
    sample_Theta_batch,
    sample_Y_batch,
    sample_Z_batch,
)
from .rng import RandomStream

__all__ = [
    "METHODS",
    "REJECTION_METHODS",
    "ClusterConstructionSpec",
    "ShiftDistribution",
    "check_tau",
    "construct_Q_batch",
    "construct_Q",
    "random_shift_batch",
    "random_shift",
    "m_truncate",
    "spectral_cluster_transform",
    "rejection_batch",
    "lattice_of",
]

METHODS = (
    "norm_theta",
    "norm_y",
    "norm_z",
    "norm_tilted_y",
    "involution_theta",
    "anchor_y",
    "involution_z",
)
# constructions that reject on an anchoring or involution event
REJECTION_METHODS = ("involution_theta", "anchor_y", "involution_z")


@dataclass(frozen=True)
class ClusterConstructionSpec:
    """Which cluster field to build.

    Parameters
    ----------
    method : str
        One of :data:`METHODS`.
    lattice : LatticeSpec or None
        ``None`` means the ambient grid.
    b : float
        Threshold scale, ``b >= 1``.
    tau : float
        Exceedance exponent.
    anchor : str
        ``"first_exceedance"`` or ``"infargsup"``; the anchoring map used by
        ``anchor_y``.
    conditional : bool
        For ``norm_y`` with ``b > 1``: sample conditionally on
        ``M_L(Y) > b`` by rejection instead of keeping zero fields.
    denominator : str
        For ``norm_y``: ``"Y"`` divides by ``B_{L,tau}(Y)``; ``"bY"`` uses
        ``B_{L,tau}(bY)``.  The second variant is experimental.
    max_attempt_ratio : int
        Rejection budget per requested draw.
    """

    method: str = "norm_theta"
    lattice: LatticeSpec | None = None
    b: float = 1.0
    tau: float = 0.0
    anchor: str = "first_exceedance"
    conditional: bool = False
    denominator: str = "Y"
    max_attempt_ratio: int = 10_000

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ConfigurationError(f"unknown construction {self.method!r}; choose from {', '.join(METHODS)}")
        if not (self.b >= 1 and math.isfinite(self.b)):
            raise ConfigurationError("b must be a finite real >= 1")
        if not math.isfinite(self.tau):
            raise ConfigurationError("tau must be finite")
        if self.anchor not in ("first_exceedance", "infargsup"):
            raise ConfigurationError("anchor must be 'first_exceedance' or 'infargsup'")
        if self.denominator not in ("Y", "bY"):
            raise ConfigurationError("denominator must be 'Y' or 'bY'")
        if self.max_attempt_ratio < 1:
            raise ConfigurationError("max_attempt_ratio must be >= 1")

    @property
    def uses_rejection(self) -> bool:
        return self.method in REJECTION_METHODS or (self.method == "norm_y" and self.conditional and self.b > 1)


def check_tau(model: ModelSpec, tau: float) -> None:
    """Admissibility of ``tau``: ``sup_s E||Theta(s)||^tau`` finite on boxes.

    Every ``tau >= 0`` qualifies for the implemented models (finite windows
    and lognormal or bounded-on-boxes spectral tails).  Negative ``tau`` is
    only admissible for Brown-Resnick, whose spectral tail never vanishes.
    """
    if tau < 0 and model.kind != "brown_resnick":
        raise ConfigurationError("tau < 0 is inadmissible for models whose spectral tail can vanish")


def lattice_of(window: Window, lattice: LatticeSpec | None) -> LatticeSpec:
    if lattice is None:
        return LatticeSpec.identity(window.dim, window.grid_spacing)
    if lattice.ambient_dim != window.dim:
        raise ConfigurationError("lattice dimension does not match the window")
    return lattice


# ----------------------------------------------------------------------------
# rejection driver


def rejection_batch(
    propose: Callable[[int, np.random.Generator], Batch],
    accept: Callable[[Batch], np.ndarray],
    n: int,
    rng: np.random.Generator,
    max_attempt_ratio: int,
    transform: Callable[[Batch, np.ndarray], Batch] | None = None,
) -> Batch:
    """Collect ``n`` accepted proposals and the attempts each one consumed.

    Proposals are drawn in chunks; acceptance ``i`` is charged the number of
    candidates since acceptance ``i - 1``.  Candidates after the ``n``-th
    acceptance are discarded, so attempts are i.i.d. geometric.
    """
    budget = max(n * max_attempt_ratio, 1000)
    got_vals, got_w, got_att, infos = [], [], [], []
    since_last = 0
    used = 0
    need = n
    chunk = max(256, n)
    window = None
    rate = None
    while need > 0 and used < budget:
        size = min(chunk, budget - used)
        cand = propose(size, rng)
        window = cand.window
        ok = np.asarray(accept(cand), dtype=bool) & (cand.weight > 0)
        idx = np.flatnonzero(ok)
        if len(idx) > need:
            idx = idx[:need]
            consumed = int(idx[-1]) + 1
        else:
            consumed = size
        if len(idx):
            gaps = np.diff(np.concatenate([[-1], idx]))
            gaps[0] += since_last
            since_last = consumed - 1 - int(idx[-1])
            sub = transform(cand, idx) if transform else Batch(cand.window, cand.values[idx], cand.weight[idx])
            got_vals.append(sub.values)
            got_w.append(sub.weight)
            got_att.append(gaps.astype(np.int64))
            infos.append(sub.info)
            need -= len(idx)
        else:
            since_last += consumed
        used += consumed
        rate = (n - need) / used
        if rate > 0:
            chunk = int(min(max(256, 1.2 * need / rate + 64), 1 << 18))
        else:
            chunk = min(chunk * 4, 1 << 18)
    accepted = n - need
    if accepted == 0:
        raise DegenerateConditioningError(f"no acceptance in {used} candidate draws")
    if need > 0:
        warnings.warn(f"rejection budget exhausted: {accepted} of {n} draws accepted", TruncationWarning, stacklevel=2)
    out = Batch(window, np.concatenate(got_vals), np.concatenate(got_w), np.concatenate(got_att))
    out.info = {"attempts": used, "accepted": accepted, "acceptance_rate": accepted / used}
    return out


# ----------------------------------------------------------------------------
# constructions


def _stats(batch: Batch, model: ModelSpec, lattice: LatticeSpec, tau: float = 0.0, b: float = 1.0):
    x = restricted_norms(batch.window, batch.values, batch.covered, lattice, model.norm)
    return x, path_stats(x, batch.window.center, model.alpha, tau, b)


def _scale(values: np.ndarray, c: np.ndarray, alpha: float) -> np.ndarray:
    return values * (c ** (1.0 / alpha))[:, None, None]


def construct_Q_batch(
    spec: ClusterConstructionSpec,
    model: ModelSpec,
    window: Window,
    n: int,
    rng: np.random.Generator,
    shift: ShiftDistribution | None = None,
) -> Batch:
    """``n`` draws of the cluster field ``Q`` (see module docstring for the
    meaning of the weights).

    Raises
    ------
    ContractViolation
        If a normalizing sum vanishes on a positive-weight draw.
    DegenerateConditioningError
        If a rejection construction accepts nothing within its budget.
    """
    check_tau(model, spec.tau)
    L = lattice_of(window, spec.lattice)
    delta = covolume(L)
    a = model.alpha
    m = spec.method
    if window.center < 0 or not window.lattice_mask(L)[window.center]:  # pragma: no cover
        raise ConfigurationError("the origin must belong to the lattice")

    if m == "norm_theta":
        tb = sample_Theta_batch(model, window, n, rng)
        _, st = _stats(tb, model, L)
        bad = (st.s_alpha <= 0) & (tb.weight > 0)
        if bad.any():
            raise ContractViolation("S_L(Theta) = 0 on a positive-weight draw")
        c = 1.0 / (delta * np.where(st.s_alpha > 0, st.s_alpha, 1.0))
        return Batch(window, _scale(tb.values, c, a), tb.weight.copy())

    if m == "norm_z":
        zb = sample_Z_batch(model, window, n, rng, shift)
        x, st = _stats(zb, model, L)
        z0 = x[:, window.center]
        with np.errstate(divide="ignore", invalid="ignore"):
            c = np.where(st.s_alpha > 0, z0**a / (delta * st.s_alpha), 0.0)
        # Q vanishes when Z(0) = 0; such draws are kept with weight 0
        return Batch(window, _scale(zb.values, c, a), zb.weight * (c > 0), info=dict(zb.info))

    if m in ("norm_y", "norm_tilted_y"):

        def propose(k: int, g: np.random.Generator) -> Batch:
            return sample_Y_batch(model, window, k, g)

        def finish(yb: Batch, idx: np.ndarray | None = None) -> Batch:
            if idx is not None:
                yb = Batch(yb.window, yb.values[idx], yb.weight[idx])
            x, st = _stats(yb, model, L, spec.tau, 1.0)
            y0 = x[:, window.center]
            bden = st.b_tau
            if m == "norm_y" and spec.denominator == "bY" and spec.b != 1.0:
                bden = _stats(yb, model, L, spec.tau, spec.b)[1].b_tau
            if np.any((bden <= 0) & (yb.weight > 0)):
                raise ContractViolation("B_{L,tau} = 0 on a positive-weight draw")
            ind = st.sup > spec.b
            safe_b = np.where(bden > 0, bden, 1.0)
            safe_m = np.where(st.sup > 0, st.sup, 1.0)
            if m == "norm_y":
                c = np.where(ind, spec.b**a * y0**spec.tau / (delta * safe_m**a * safe_b), 0.0)
                return Batch(window, _scale(yb.values, c, a), yb.weight * ind)
            w = yb.weight * ind * y0**spec.tau / (delta * safe_b)
            vals = yb.values * np.where(ind, spec.b / safe_m, 0.0)[:, None, None]
            return Batch(window, vals, w)

        if m == "norm_y" and spec.uses_rejection:
            return rejection_batch(
                propose,
                lambda yb: _stats(yb, model, L)[1].sup > spec.b,
                n,
                rng,
                spec.max_attempt_ratio,
                transform=finish,
            )
        return finish(propose(n, rng))

    # rejection on an anchoring or involution event
    inv_root = delta ** (-1.0 / a)

    if m == "involution_theta":
        def propose(k, g):
            return sample_Theta_batch(model, window, k, g)

        def accept(tb):
            return _stats(tb, model, L)[1].argsup == window.center

        def finish(tb, idx):
            return Batch(window, tb.values[idx] * inv_root, tb.weight[idx])

    elif m == "involution_z":
        def propose(k, g):
            return sample_Z_batch(model, window, k, g, shift)

        def accept(zb):
            return _stats(zb, model, L)[1].argsup == window.center

        def finish(zb, idx):
            return Batch(window, zb.values[idx] * inv_root, zb.weight[idx])

    else:  # anchor_y
        def propose(k, g):
            return sample_Y_batch(model, window, k, g)

        def accept(yb):
            st = _stats(yb, model, L)[1]
            j = st.first_exc if spec.anchor == "first_exceedance" else st.argsup
            return (j == window.center) & (st.sup > spec.b)

        def finish(yb, idx):
            sup = _stats(Batch(window, yb.values[idx], yb.weight[idx]), model, L)[1].sup
            return Batch(window, yb.values[idx] * (spec.b * inv_root / sup)[:, None, None], yb.weight[idx])

    return rejection_batch(propose, accept, n, rng, spec.max_attempt_ratio, transform=finish)


def construct_Q(
    spec: ClusterConstructionSpec,
    model: ModelSpec,
    window: Window,
    stream: RandomStream,
    shift: ShiftDistribution | None = None,
) -> WeightedDraw:
    """One cluster draw.  ``attempts`` carries the rejection count."""
    return construct_Q_batch(spec, model, window, 1, stream.generator(), shift).draw(0)


# ----------------------------------------------------------------------------
# field transforms


def random_shift_batch(
    batch: Batch, shift: ShiftDistribution, alpha: float, rng: np.random.Generator, norm=None
) -> Batch:
    """``Z_N = B^N Q / p_N(N)^{1/alpha}`` on the same window.

    The shift box defaults to the largest one for which a cluster supported
    on ``[-a/2, a/2]`` cannot leave the window.  Mass pushed out of the
    window is recorded as ``info["escaped_fraction"]`` and triggers a
    :class:`TruncationWarning` above ``1e-6``.
    """
    window = batch.window
    if shift.half_width is None:
        shift = shift.with_half_width(min(window.half_width) // 2)
    box = shift.support(window.dim)
    dens = shift.density(window.dim, window.grid_spacing)
    cdf = np.cumsum(dens) / np.sum(dens)
    k = np.minimum(np.searchsorted(cdf, rng.random(len(batch)), side="right"), len(cdf) - 1)
    out_v = np.zeros_like(batch.values)
    out_c = np.zeros((len(batch), window.size), dtype=bool)
    for kk in np.unique(k):
        rows = np.flatnonzero(k == kk)
        cov = None if batch.covered is None else batch.covered[rows]
        v, c = shift_batch(window, batch.values[rows], cov, box[kk])
        out_v[rows] = v * dens[kk] ** (-1.0 / alpha)
        out_c[rows] = c
    before = np.abs(batch.values).sum(axis=(1, 2))
    after = np.abs(out_v).sum(axis=(1, 2)) * dens[k] ** (1.0 / alpha)
    with np.errstate(divide="ignore", invalid="ignore"):
        frac = np.where(before > 0, 1.0 - after / before, 0.0)
    escaped = float(max(frac.max(initial=0.0), 0.0))
    if escaped > 1e-6:
        warnings.warn(f"random shift pushed {escaped:.2e} of a cluster out of the window", TruncationWarning, stacklevel=2)
    info = dict(batch.info)
    info.update(shift=shift.kind, shift_half_width=shift.half_width, escaped_fraction=escaped, shift_index=box[k])
    return Batch(window, out_v, batch.weight.copy(), batch.attempts.copy(), out_c, info)


def random_shift(Q_draw: WeightedDraw, shift: ShiftDistribution, alpha: float, stream: RandomStream) -> WeightedDraw:
    """Single-draw form of :func:`random_shift_batch`."""
    s = Q_draw.sample
    b = Batch(s.window, s.values[None], np.array([Q_draw.weight]), np.array([Q_draw.attempts]), s.covered[None])
    return random_shift_batch(b, shift, alpha, stream.generator()).draw(0)


def m_truncate(Q_draw: WeightedDraw | Batch, m: float):
    """Zero the field outside the l1-ball of radius ``m``."""
    if not m > 0:
        raise ConfigurationError("m must be positive")
    if isinstance(Q_draw, Batch):
        keep = Q_draw.window.radius_mask(m, ord=1)
        return Batch(Q_draw.window, Q_draw.values * keep[None, :, None], Q_draw.weight.copy(), Q_draw.attempts.copy(), Q_draw.covered, dict(Q_draw.info))
    s = Q_draw.sample
    keep = s.window.radius_mask(m, ord=1)
    return WeightedDraw(FieldSample(s.window, s.values * keep[:, None], s.covered), Q_draw.weight, Q_draw.attempts)


def spectral_cluster_transform(Q_draw: WeightedDraw | Batch, gamma: str, alpha: float, p: float | None = None, norm=None):
    """Normalize a cluster so that a homogeneous functional equals 1.

    ``gamma="p_sum"`` uses ``Gamma(Q) = sum ||Q(t)||^p delta^l`` with
    ``xi = alpha / p``; ``gamma="sup_alpha"`` uses ``sup ||Q||^alpha`` with
    ``xi = 1``.  The weight is multiplied by ``Gamma^xi`` and the field
    divided by ``Gamma^{xi / alpha}``; for alpha-homogeneous ``H`` the mass
    ``E[weight * H(Q)]`` is therefore unchanged.
    """
    from .field import NormSpec

    norm = norm or NormSpec()
    single = isinstance(Q_draw, WeightedDraw)
    if single:
        s = Q_draw.sample
        batch = Batch(s.window, s.values[None], np.array([Q_draw.weight]), np.array([Q_draw.attempts]), s.covered[None])
    else:
        batch = Q_draw
    x = restricted_norms(batch.window, batch.values, batch.covered, None, norm)
    if gamma == "p_sum":
        if p is None or not p > 0:
            raise ConfigurationError("p_sum needs p > 0")
        g = np.sum(x**p, axis=1) * batch.window.cell_volume
        xi = alpha / p
    elif gamma == "sup_alpha":
        g = x.max(axis=1) ** alpha
        xi = 1.0
    else:
        raise ConfigurationError("gamma must be 'p_sum' or 'sup_alpha'")
    live = batch.weight > 0
    if np.any((g <= 0) & live):
        raise ContractViolation("Gamma(Q) = 0 on a positive-weight draw")
    safe = np.where(g > 0, g, 1.0)
    out = Batch(
        batch.window,
        batch.values / (safe ** (xi / alpha))[:, None, None],
        np.where(live, batch.weight * safe**xi, 0.0),
        batch.attempts.copy(),
        batch.covered,
        dict(batch.info),
    )
    return out.draw(0) if single else out
