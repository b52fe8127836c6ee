"""Two-sided Monte Carlo checks of distributional identities.

Each :class:`IdentityCase` names an identity, a model, a test functional and
parameters.  Every side of the identity is estimated from its own random
stream (never common random numbers) as a ratio ``E[a] / E[b]``; the case
reports ``z = (lhs - rhs) / sqrt(se_lhs^2 + se_rhs^2)`` with ``0/0 = 0``.
Identities with more than two sides are reported as one case per pair
(first side against each other side).
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .cluster import ClusterConstructionSpec, construct_Q_batch
from .errors import ConfigurationError
from .extremal import EstimateReport, _run
from .field import Window, path_stats
from .models import ModelSpec, decay_radius, sample_Theta_batch, sample_Y_batch, sample_Z_batch

__all__ = [
    "TestFunctional",
    "FUNCTIONALS",
    "IdentityCase",
    "IdentityResult",
    "run_identity",
    "default_battery",
    "run_battery",
    "battery_summary",
    "run_event_equality",
    "identity_window",
]

IDENTITIES = ("spectral_shift", "tail_shift", "cluster_four_way", "anchor_sum", "anchor_conditional", "window_sup", "dissipative_events")


@dataclass(frozen=True)
class TestFunctional:
    """A bounded functional of the norm path.

    ``fn(x, window, alpha, h)`` maps norms ``x`` of shape ``(n, P)`` to
    ``(n,)`` values of the functional at ``B^h f``; shift-invariant
    functionals ignore ``h``.  ``homogeneity`` is the degree ``v`` with
    ``F(c f) = c^v F(f)``, or None when the functional is not homogeneous.
    """

    __test__ = False  # not a pytest class

    id: str
    kind: str
    points: tuple
    shift_invariant: bool
    bound: float
    homogeneity: float | None
    fn: Callable = field(repr=False, compare=False)

    def __call__(self, x, window, alpha, h=0):
        return self.fn(x, window, alpha, h)


def _at(x, window, t):
    i = int(window.index_of([t])[0])
    if i < 0:
        raise ConfigurationError(f"point {t} lies outside the identity window")
    return x[:, i]


def _ratio01(x, w, a, h):
    u = _at(x, w, 0 - h) ** a
    v = _at(x, w, 1 - h) ** a
    s = u + v
    return np.divide(u, s, out=np.zeros_like(s), where=s > 0)


def _order(x, w, a, h):
    return (_at(x, w, -1 - h) < _at(x, w, 1 - h)).astype(float)


def _exc_pair(x, w, a, h):
    return (_at(x, w, 0 - h) > 1.5) * np.minimum(_at(x, w, 1 - h), 1.0)


def _clip(x, w, a, h):
    return np.minimum(_at(x, w, 1 - h), 2.0) / 2.0


def _sup_alpha(x, w, a, h):
    return x.max(axis=1) ** a


def _l2(x, w, a, h):
    return np.sqrt(np.sum(x ** (2 * a), axis=1))


def _max_exceeds(x, w, a, h):
    return (x.max(axis=1) > 2.0).astype(float)


def _sup_over_sum(x, w, a, h):
    s = np.sum(x**a, axis=1)
    return np.divide(x.max(axis=1) ** a, s, out=np.zeros_like(s), where=s > 0)


FUNCTIONALS = {
    f.id: f
    for f in (
        TestFunctional("ratio01", "bounded_ratio", (0, 1), False, 1.0, 0.0, _ratio01),
        TestFunctional("order_m1_p1", "bounded_ratio", (-1, 1), False, 1.0, 0.0, _order),
        TestFunctional("exc_pair", "indicator_exceedance", (0, 1), False, 1.0, None, _exc_pair),
        TestFunctional("clip_p1", "indicator_exceedance", (1,), False, 1.0, None, _clip),
        TestFunctional("sup_alpha", "alpha_weighted", (), True, math.inf, 1.0, _sup_alpha),
        TestFunctional("l2_alpha", "alpha_weighted", (), True, math.inf, 1.0, _l2),
        TestFunctional("max_exceeds_2", "indicator_exceedance", (), True, 1.0, None, _max_exceeds),
        TestFunctional("sup_over_sum", "bounded_ratio", (), True, 1.0, 0.0, _sup_over_sum),
        TestFunctional("one", "bounded_ratio", (), True, 1.0, 0.0, lambda x, w, a, h: np.ones(len(x))),
    )
}
# alpha_weighted functionals are alpha-homogeneous: degree is in units of alpha
_ALPHA_UNITS = {"sup_alpha", "l2_alpha"}

COMPATIBLE = {
    "spectral_shift": lambda f: f.homogeneity == 0.0,
    "tail_shift": lambda f: f.bound < math.inf,
    "cluster_four_way": lambda f: f.shift_invariant and f.id in _ALPHA_UNITS,
    "anchor_sum": lambda f: f.shift_invariant and f.id in _ALPHA_UNITS,
    "anchor_conditional": lambda f: f.shift_invariant,
    "window_sup": lambda f: True,
    "dissipative_events": lambda f: True,
}


@dataclass(frozen=True)
class IdentityCase:
    """One identity check.

    ``params`` keys: ``h`` (shift), ``x`` (level), ``tau``, ``K`` (half-width
    of the window box), ``sides`` (pair of side indices), ``construction``.
    """

    identity_id: str
    model: ModelSpec
    functional: str = "one"
    params: tuple = ()
    n: int = 100_000
    seed: int = 0
    window: Window | None = None

    def __post_init__(self) -> None:
        if self.identity_id not in IDENTITIES:
            raise ConfigurationError(f"unknown identity {self.identity_id!r}")
        if self.functional not in FUNCTIONALS:
            raise ConfigurationError(f"unknown functional {self.functional!r}")
        if not COMPATIBLE[self.identity_id](FUNCTIONALS[self.functional]):
            raise ConfigurationError(f"functional {self.functional!r} is incompatible with {self.identity_id}")
        if self.n < 2:
            raise ConfigurationError("n must be >= 2")

    @property
    def p(self) -> dict:
        return dict(self.params)

    @property
    def label(self) -> str:
        extra = ",".join(f"{k}={v}" for k, v in self.params)
        return f"{self.identity_id}[{self.model.kind},{self.functional}{',' + extra if extra else ''}]"


@dataclass
class IdentityResult:
    label: str
    identity_id: str
    model: str
    functional: str
    lhs: float
    lhs_stderr: float
    rhs: float
    rhs_stderr: float
    z: float

    def to_dict(self) -> dict:
        return asdict(self)


def identity_window(model: ModelSpec, reach: int = 2) -> Window:
    """Window large enough for Theta truncation and for exact ``Z`` near 0."""
    if model.kind == "brown_resnick":
        return Window.cube(32, model.dim_l, model.grid_spacing)
    r = decay_radius(model)
    return Window.cube(max(2 * r + reach + 2, 8), model.dim_l)


# ----------------------------------------------------------------------------
# sides: each returns draw(k, rng) -> (a, b)


def _norms(batch, model):
    return model.norm(batch.values)


def _sides(case: IdentityCase, window: Window) -> list[Callable]:
    m = case.model
    a = m.alpha
    f = FUNCTIONALS[case.functional]
    p = case.p
    c = window.center
    iid = case.identity_id

    if iid == "spectral_shift":
        h = int(p.get("h", 1))

        def lhs(k, rng):
            tb = sample_Theta_batch(m, window, k, rng)
            x = _norms(tb, m)
            return tb.weight * _at(x, window, h) ** a * f(x, window, a), tb.weight

        def rhs(k, rng):
            tb = sample_Theta_batch(m, window, k, rng)
            x = _norms(tb, m)
            return tb.weight * (_at(x, window, -h) != 0) * f(x, window, a, h), tb.weight

        return [lhs, rhs]

    if iid == "tail_shift":
        h = int(p.get("h", 1))
        lev = float(p.get("x", 2.0))

        def lhs(k, rng):
            yb = sample_Y_batch(m, window, k, rng)
            x = _norms(yb, m)
            return yb.weight * lev**-a * f(lev * x, window, a, h) * (lev * _at(x, window, -h) > 1), yb.weight

        def rhs(k, rng):
            yb = sample_Y_batch(m, window, k, rng)
            x = _norms(yb, m)
            return yb.weight * f(x, window, a) * (_at(x, window, h) > lev), yb.weight

        return [lhs, rhs]

    if iid in ("cluster_four_way", "anchor_sum"):
        cons = ClusterConstructionSpec(p.get("construction", "anchor_y"))

        def theta_over_s(k, rng):
            tb = sample_Theta_batch(m, window, k, rng)
            x = _norms(tb, m)
            st = path_stats(x, c, a)
            return tb.weight * f(x, window, a) / st.s_alpha, tb.weight

        def theta_j1(k, rng):
            tb = sample_Theta_batch(m, window, k, rng)
            x = _norms(tb, m)
            st = path_stats(x, c, a)
            return tb.weight * f(x, window, a) * (st.argsup == c), tb.weight

        def y_j2(k, rng):
            yb = sample_Y_batch(m, window, k, rng)
            x = _norms(yb, m)
            st = path_stats(x, c, a)
            # restricted (not conditional) expectation of H(Y) / M^alpha
            return yb.weight * f(x, window, a) / st.sup**a * (st.first_exc == c), yb.weight

        def z_side(k, rng):
            zb = sample_Z_batch(m, window, k, rng)
            x = _norms(zb, m)
            st = path_stats(x, c, a)
            if iid == "cluster_four_way":
                z0 = x[:, c]
                val = np.divide(z0**a * f(x, window, a), st.s_alpha, out=np.zeros(k), where=st.s_alpha > 0)
            else:
                val = f(x, window, a) * (st.argsup == c)
            return zb.weight * val, zb.weight

        def q_side(k, rng):
            qb = construct_Q_batch(cons, m, window, k, rng)
            x = _norms(qb, m)
            return qb.weight * f(x, window, a), qb.attempts.astype(float)

        if iid == "cluster_four_way":
            return [theta_over_s, y_j2, z_side, q_side]
        return [theta_over_s, theta_j1, y_j2, z_side]

    if iid == "anchor_conditional":
        tau = float(p.get("tau", 0.0))

        def lhs(k, rng):
            yb = sample_Y_batch(m, window, k, rng)
            x = _norms(yb, m)
            st = path_stats(x, c, a, tau, 1.0)
            return yb.weight * x[:, c] ** tau * f(x, window, a) / st.b_tau, yb.weight

        def rhs(k, rng):
            yb = sample_Y_batch(m, window, k, rng)
            x = _norms(yb, m)
            st = path_stats(x, c, a)
            return yb.weight * f(x, window, a) * (st.first_exc == c), yb.weight

        return [lhs, rhs]

    if iid == "window_sup":
        tau = float(p.get("tau", 0.0))
        K = int(p.get("K", 1))
        ks = np.arange(-K, K + 1)
        kidx = window.index_of(ks[:, None])
        # offsets s - t for s, t in K: matrix of flat indices [t, s]
        off = window.index_of((ks[None, :] - ks[:, None]).reshape(-1, 1)).reshape(len(ks), len(ks))
        if np.any(kidx < 0) or np.any(off < 0):
            raise ConfigurationError("window box does not fit the window")

        def lhs(k, rng):
            zb = sample_Z_batch(m, window, k, rng)
            x = _norms(zb, m)
            return zb.weight * x[:, kidx].max(axis=1) ** a, zb.weight

        def rhs(k, rng):
            yb = sample_Y_batch(m, window, k, rng)
            r = yb.info["radius"]
            x = _norms(yb, m)
            th = x / r[:, None]
            total = np.zeros(k)
            for row in off:
                yy = x[:, row]
                tt = th[:, row]
                with np.errstate(divide="ignore"):
                    powt = np.where(yy > 1, tt**tau, 0.0)
                total += 1.0 / powt.sum(axis=1)
            return yb.weight * total, yb.weight

        return [lhs, rhs]

    raise ConfigurationError(f"{iid} is not a two-sided identity; use run_event_equality")


def _side_report(case: IdentityCase, side: int, draw, threads: int) -> EstimateReport:
    def wrapped(k, rng):
        a, b = draw(k, rng)
        return a, b, None, a, {}

    params = {"case": case.label, "side": side}
    return _run(f"identity:{case.identity_id}", params, case.n, case.seed, threads, wrapped)


def _z(l: EstimateReport, r: EstimateReport) -> float:
    diff = l.value - r.value
    se = math.hypot(l.stderr, r.stderr)
    if diff == 0:
        return 0.0
    return diff / se if se > 0 else math.copysign(math.inf, diff)


def run_identity(case: IdentityCase, threads: int = 1, swap_streams: bool = False) -> IdentityResult:
    """Estimate both sides of ``case`` independently and return the z-score.

    ``params["sides"] = (i, j)`` selects which sides of a multi-sided
    identity are compared (default ``(0, 1)``).  ``swap_streams`` exchanges
    the random streams of the two sides.
    """
    window = case.window or identity_window(case.model, int(case.p.get("K", 2)) + 2)
    sides = _sides(case, window)
    i, j = case.p.get("sides", (0, 1))
    si, sj = (j, i) if swap_streams else (i, j)
    lhs = _side_report(case, si, sides[i], threads)
    rhs = _side_report(case, sj, sides[j], threads)
    return IdentityResult(case.label, case.identity_id, case.model.kind, case.functional, lhs.value, lhs.stderr, rhs.value, rhs.stderr, _z(lhs, rhs))


def default_battery(n: int = 100_000, seed: int = 0, alpha: float = 1.0) -> list[IdentityCase]:
    """The standard battery over the AR(1) and moving-maximum models."""
    models = [
        ModelSpec("ar1_tail_chain", alpha=alpha, phi=0.5),
        ModelSpec("moving_max", alpha=alpha, coeffs=(2.0, 1.0)),
    ]
    cases: list[IdentityCase] = []

    def add(iid, m, fn, **params):
        cases.append(IdentityCase(iid, m, fn, tuple(sorted(params.items())), n, seed))

    for m in models:
        for fn in ("ratio01", "order_m1_p1"):
            add("spectral_shift", m, fn, h=1)
        add("spectral_shift", m, "ratio01", h=-1)
        for fn in ("exc_pair", "clip_p1"):
            for x in (0.5, 2.0):
                add("tail_shift", m, fn, h=1, x=x)
        add("tail_shift", m, "one", h=0, x=2.0)
        for fn, cons in (("sup_alpha", "anchor_y"), ("l2_alpha", "norm_tilted_y")):
            for sides in ((0, 1), (0, 2), (0, 3)):
                add("cluster_four_way", m, fn, sides=sides, construction=cons)
        for fn in ("sup_alpha", "l2_alpha"):
            for sides in ((0, 1), (0, 2), (0, 3)):
                add("anchor_sum", m, fn, sides=sides)
        add("anchor_conditional", m, "max_exceeds_2", tau=0.0)
        add("anchor_conditional", m, "sup_over_sum", tau=alpha)
        for tau in (0.0, alpha):
            add("window_sup", m, "one", K=1, tau=tau)
    return cases


def run_battery(cases, threads: int = 1, swap_streams: bool = False) -> list[IdentityResult]:
    return [run_identity(c, threads, swap_streams) for c in cases]


def battery_summary(results, threshold: float = 5.0, flag_from: float = 4.0, max_flagged: int = 2) -> dict:
    zs = [abs(r.z) for r in results]
    flagged = sum(flag_from <= z < threshold for z in zs)
    ok = all(z < threshold for z in zs) and flagged <= max_flagged
    return {"cases": len(results), "max_abs_z": max(zs) if zs else 0.0, "flagged": flagged, "verdict": "PASS" if ok else "FAIL"}


def run_event_equality(model: ModelSpec, window: Window, n: int, seed: int, tau: float = 0.0, b: float = 1.0) -> dict:
    """Per-draw agreement of proxies for the events that characterize
    dissipativity.

    Proxies (per draw): ``S(Y)`` finite when the outer-half mass is below
    ``1e-4`` of the inner-half mass; ``||Theta|| -> 0`` when the outer ring
    maximum is below ``1e-3``; ``J1(Theta)`` and ``J2(Y)`` defined (always
    true on a finite window); ``B_{L,tau}(bY)`` finite when ``bY`` has no
    exceedance in the outer half.
    """
    from .rng import RandomStream, purpose_key

    rng = RandomStream(seed, 0, purpose_key("dissipative_events", model.kind)).generator()
    tb = sample_Theta_batch(model, window, n, rng)
    from .models import pareto_radii

    r = pareto_radii(model.alpha, n, rng)
    th = model.norm(tb.values)
    y = th * r[:, None]
    a = model.alpha
    radius = np.abs(window.points).max(axis=1)
    outer = radius > max(window.half_width) / 2
    inner = ~outer
    ya = y**a
    ev = {
        "S_finite": ya[:, outer].sum(axis=1) < 1e-4 * ya[:, inner].sum(axis=1),
        "theta_decays": th[:, outer].max(axis=1, initial=0.0) < 1e-3,
        "J1_defined": th.max(axis=1) > 0,
        "J2_defined": (y > 1).any(axis=1),
        "B_finite": ~((b * y[:, outer]) >= 1).any(axis=1),
    }
    names = list(ev)
    rates = {}
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            rates[f"{names[i]}~{names[j]}"] = float(np.mean(ev[names[i]] == ev[names[j]]))
    return {
        "event_rates": {k: float(v.mean()) for k, v in ev.items()},
        "agreement": rates,
        "min_agreement": min(rates.values()),
        "verdict": "PASS" if min(rates.values()) >= 0.999 else "FAIL",
    }
