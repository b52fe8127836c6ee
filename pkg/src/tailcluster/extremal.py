"""Monte Carlo estimators of the candidate extremal index.

Each estimator writes the target as a ratio ``E[a] / E[b]`` of per-draw
quantities, accumulates the sums block by block and reports the ratio with a
delta-method standard error.  Plain means are the special case ``b = 1``.
Block ``k`` of every estimator uses its own stream keyed by the estimator
name and parameters, so reports are reproducible for any thread count.
"""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import stats as sps

from .cluster import ClusterConstructionSpec, check_tau, construct_Q_batch, lattice_of, m_truncate, rejection_batch
from .errors import ConfigurationError, ContractViolation
from .field import Window, path_stats, restricted_norms
from .lattice import LatticeSpec, covolume
from .models import (
    Batch,
    ModelSpec,
    ShiftDistribution,
    decay_radius,
    sample_Theta_batch,
    sample_Y_batch,
    sample_Z_batch,
)
from .rng import RandomStream, purpose_key, run_blocks

__all__ = [
    "EstimatorAccumulator",
    "EstimateReport",
    "ConsistencyVerdict",
    "estimate_samorodnitsky",
    "estimate_berman",
    "estimate_albin",
    "estimate_difference",
    "estimate_cluster_sup",
    "estimate_mixed",
    "estimate_grid_limit",
    "estimate_m_approx",
    "pareto_conditional_check",
    "consistency_report",
    "REPRESENTATIONS",
    "parse_representation",
    "standard_representations",
    "run_representation",
]


@dataclass
class EstimatorAccumulator:
    """Streaming sums for a ratio estimator ``sum a / sum b``.

    ``merge`` is associative and commutative up to floating point rounding;
    callers merge in block order to make results bit-reproducible.
    """

    representation_id: str = ""
    count: int = 0
    weight_sum: float = 0.0
    weight_sq_sum: float = 0.0
    sum_a: float = 0.0
    sum_b: float = 0.0
    sum_aa: float = 0.0
    sum_bb: float = 0.0
    sum_ab: float = 0.0
    draw_mean: float = 0.0
    draw_m2: float = 0.0

    @property
    def weighted_sum(self) -> float:
        return self.sum_a

    @property
    def weighted_sum_sq(self) -> float:
        return self.sum_aa

    def add(self, a: np.ndarray, b: np.ndarray | None = None, w: np.ndarray | None = None, per_draw: np.ndarray | None = None) -> "EstimatorAccumulator":
        """Add a batch of draws (returns ``self``)."""
        a = np.asarray(a, dtype=np.float64)
        b = np.ones_like(a) if b is None else np.asarray(b, dtype=np.float64)
        w = np.ones_like(a) if w is None else np.asarray(w, dtype=np.float64)
        pd = a if per_draw is None else np.asarray(per_draw, dtype=np.float64)
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ContractViolation(f"{self.representation_id}: non-finite per-draw value")
        other = EstimatorAccumulator(
            self.representation_id,
            len(a),
            float(w.sum()),
            float((w * w).sum()),
            float(a.sum()),
            float(b.sum()),
            float((a * a).sum()),
            float((b * b).sum()),
            float((a * b).sum()),
            float(pd.mean()) if len(pd) else 0.0,
            float(((pd - pd.mean()) ** 2).sum()) if len(pd) else 0.0,
        )
        merged = self.merge(other)
        self.__dict__.update(merged.__dict__)
        return self

    def merge(self, other: "EstimatorAccumulator") -> "EstimatorAccumulator":
        n = self.count + other.count
        if n == 0:
            return EstimatorAccumulator(self.representation_id or other.representation_id)
        d = other.draw_mean - self.draw_mean
        mean = self.draw_mean + d * other.count / n
        m2 = self.draw_m2 + other.draw_m2 + d * d * self.count * other.count / n
        return EstimatorAccumulator(
            self.representation_id or other.representation_id,
            n,
            self.weight_sum + other.weight_sum,
            self.weight_sq_sum + other.weight_sq_sum,
            self.sum_a + other.sum_a,
            self.sum_b + other.sum_b,
            self.sum_aa + other.sum_aa,
            self.sum_bb + other.sum_bb,
            self.sum_ab + other.sum_ab,
            mean,
            m2,
        )

    @property
    def value(self) -> float:
        return self.sum_a / self.sum_b if self.sum_b > 0 else float("nan")

    @property
    def stderr(self) -> float:
        """Delta-method standard error of ``sum a / sum b``."""
        n = self.count
        if n < 2 or self.sum_b <= 0:
            return float("nan")
        r = self.value
        ss = self.sum_aa - 2.0 * r * self.sum_ab + r * r * self.sum_bb
        scale = max(self.sum_aa, r * r * self.sum_bb, 1e-300)
        if ss < 1e-12 * scale:  # rounding noise of a path-constant ratio
            ss = 0.0
        return math.sqrt(max(ss, 0.0) * n / (n - 1)) / self.sum_b

    @property
    def n_effective(self) -> float:
        return self.weight_sum**2 / self.weight_sq_sum if self.weight_sq_sum > 0 else 0.0

    @property
    def per_draw_variance(self) -> float:
        return self.draw_m2 / (self.count - 1) if self.count > 1 else 0.0


@dataclass
class EstimateReport:
    """Point estimate of the extremal index from one representation."""

    representation_id: str
    value: float
    stderr: float
    n_samples: int
    n_effective: float
    per_draw_variance: float = 0.0
    params: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ConsistencyVerdict:
    """Pairwise agreement of several reports."""

    pairs: list
    max_abs_z: float
    n_flagged: int
    verdict: str

    def to_dict(self) -> dict:
        return asdict(self)


# ----------------------------------------------------------------------------
# driver


def _finalize_info(infos: list[dict]) -> dict:
    out: dict = {}
    att = sum(i.get("attempts", 0) for i in infos)
    acc = sum(i.get("accepted", 0) for i in infos)
    if att:
        out["attempts"] = att
        out["accepted"] = acc
        out["acceptance_rate"] = acc / att
    for key in ("jitter", "escaped_mass", "shift", "shift_half_width"):
        vals = [i[key] for i in infos if key in i]
        if vals:
            out[key] = max(vals) if isinstance(vals[0], float) else vals[0]
    return out


def _run(
    rep_id: str,
    params: dict,
    n: int,
    seed: int,
    threads: int,
    draw: Callable[[int, np.random.Generator], tuple],
) -> EstimateReport:
    if n < 1:
        raise ConfigurationError("n must be >= 1")
    stream = RandomStream(seed, 0, purpose_key(rep_id, *sorted((k, str(v)) for k, v in params.items())))
    t0 = time.perf_counter()

    def block(_b: int, count: int, rng: np.random.Generator):
        a, b, w, per, info = draw(count, rng)
        return EstimatorAccumulator(rep_id).add(a, b, w, per), info

    parts = run_blocks(block, n, stream, threads)
    acc = EstimatorAccumulator(rep_id)
    for p, _ in parts:
        acc = acc.merge(p)
    diag = _finalize_info([i for _, i in parts])
    diag["elapsed_s"] = time.perf_counter() - t0
    return EstimateReport(rep_id, acc.value, acc.stderr, acc.count, acc.n_effective, acc.per_draw_variance, dict(params), diag)


def _with_window_check(fn, window: Window, n: int, window_check: bool, **kw) -> EstimateReport:
    rep = fn(window=window, n=n, **kw)
    if window_check:
        n2 = max(1000, n // 10)
        big = fn(window=window.enlarge(2), n=n2, **kw)
        rep.diagnostics["window_drift"] = {
            "half_width": list(window.half_width),
            "value_2a": big.value,
            "stderr_2a": big.stderr,
            "drift": big.value - rep.value,
            "z": (big.value - rep.value) / math.hypot(big.stderr, rep.stderr) if math.hypot(big.stderr, rep.stderr) > 0 else 0.0,
        }
    return rep


def _stats(batch: Batch, model: ModelSpec, L: LatticeSpec, tau: float = 0.0, b: float = 1.0):
    x = restricted_norms(batch.window, batch.values, batch.covered, L, model.norm)
    return x, path_stats(x, batch.window.center, model.alpha, tau, b)


def _lat(window: Window, L: LatticeSpec | None) -> tuple[LatticeSpec, float]:
    L = lattice_of(window, L)
    return L, covolume(L)


def _lat_param(L: LatticeSpec | None) -> str:
    return "ambient" if L is None else ";".join(",".join(map(str, r)) for r in L.base_matrix)


# ----------------------------------------------------------------------------
# estimators


def estimate_samorodnitsky(
    model: ModelSpec, L: LatticeSpec | None, window: Window, n: int, seed: int, threads: int = 1, window_check: bool = False
) -> EstimateReport:
    """``E[ sup_L ||Theta||^alpha / (Delta(L) S_L(Theta)) ]``.

    The per-draw ratio lies in ``(0, 1/Delta(L)]``.
    """

    def run(window, n):
        Lx, delta = _lat(window, L)

        def draw(k, rng):
            tb = sample_Theta_batch(model, window, k, rng)
            _, st = _stats(tb, model, Lx)
            if np.any((st.s_alpha <= 0) & (tb.weight > 0)):
                raise ContractViolation("S_L(Theta) = 0 on a positive-weight draw")
            ratio = st.sup**model.alpha / (delta * np.where(st.s_alpha > 0, st.s_alpha, 1.0))
            return tb.weight * ratio, tb.weight, tb.weight, ratio, tb.info

        return _run("samorodnitsky", {"lattice": _lat_param(L), "a": window.half_width}, n, seed, threads, draw)

    return _with_window_check(run, window, n, window_check)


def estimate_berman(
    model: ModelSpec,
    L: LatticeSpec | None,
    window: Window,
    tau: float,
    n: int,
    seed: int,
    b: float = 1.0,
    variant: str = "corrected",
    experimental: bool = False,
    threads: int = 1,
    window_check: bool = False,
) -> EstimateReport:
    """``b^alpha E[ ||Y(0)||^tau 1{.} / (Delta(L) B_{L,tau}(Y)) ]``.

    With ``b = 1`` the indicator is identically one.  For ``b > 1`` (only
    with ``experimental=True``) two indicators are offered:
    ``"corrected"`` uses ``1{M_L(Y) > b}``, which keeps the identity exact;
    ``"literal"`` uses ``1{B_{L,tau}(bY) > 0}``, which is always one because
    ``b ||Y(0)|| >= 1``, so it estimates ``b^alpha`` times the index.
    """
    check_tau(model, tau)
    if b < 1:
        raise ConfigurationError("b must be >= 1")
    if b != 1.0 and not experimental:
        raise ConfigurationError("berman with b != 1 is experimental; pass experimental=True")
    if variant not in ("corrected", "literal"):
        raise ConfigurationError("variant must be 'corrected' or 'literal'")

    def run(window, n):
        Lx, delta = _lat(window, L)

        def draw(k, rng):
            yb = sample_Y_batch(model, window, k, rng)
            x, st = _stats(yb, model, Lx, tau, 1.0)
            if np.any(st.b_tau <= 0):
                raise ContractViolation("B_{L,tau}(Y) = 0 although ||Y(0)|| >= 1")
            y0 = x[:, window.center]
            if variant == "corrected":
                ind = st.sup > b
            else:
                ind = _stats(yb, model, Lx, tau, b)[1].b_tau > 0
            val = b**model.alpha * y0**tau * ind / (delta * st.b_tau)
            return yb.weight * val, yb.weight, yb.weight, val, {}

        params = {"lattice": _lat_param(L), "tau": tau, "b": b, "variant": variant, "a": window.half_width}
        return _run("berman", params, n, seed, threads, draw)

    return _with_window_check(run, window, n, window_check)


def estimate_albin(
    model: ModelSpec, L: LatticeSpec | None, window: Window, b: float, n: int, seed: int, threads: int = 1, window_check: bool = False
) -> EstimateReport:
    """``(b^alpha / Delta(L)) P( sup_{0 < t in L} ||Y(t)|| <= 1, M_L(Y) > b )``."""
    if not b >= 1:
        raise ConfigurationError("b must be >= 1")

    def run(window, n):
        Lx, delta = _lat(window, L)

        def draw(k, rng):
            yb = sample_Y_batch(model, window, k, rng)
            _, st = _stats(yb, model, Lx)
            ind = (st.sup_after <= 1.0) & (st.sup > b)
            val = b**model.alpha / delta * ind
            return yb.weight * val, yb.weight, yb.weight, val, {}

        return _run("albin", {"lattice": _lat_param(L), "b": b, "a": window.half_width}, n, seed, threads, draw)

    return _with_window_check(run, window, n, window_check)


def estimate_difference(
    model: ModelSpec,
    L: LatticeSpec | None,
    window: Window,
    n: int,
    seed: int,
    use_Z: bool = False,
    shift: ShiftDistribution | None = None,
    threads: int = 1,
    window_check: bool = False,
) -> EstimateReport:
    """``E[ sup_{0 <= t} ||F(t)||^alpha - sup_{0 < t} ||F(t)||^alpha ] / Delta(L)``
    with ``F = Theta`` or ``F = Z``; suprema over ``t in L``.
    """

    def run(window, n):
        Lx, delta = _lat(window, L)

        def draw(k, rng):
            fb = sample_Z_batch(model, window, k, rng, shift) if use_Z else sample_Theta_batch(model, window, k, rng)
            _, st = _stats(fb, model, Lx)
            a = model.alpha
            val = (st.sup_from**a - st.sup_after**a) / delta
            return fb.weight * val, fb.weight, fb.weight, val, fb.info

        rid = "difference_z" if use_Z else "difference"
        params = {"lattice": _lat_param(L), "a": window.half_width}
        if use_Z and model.is_discrete_cluster:
            sd = shift or model.shift
            params["shift"] = f"{sd.kind}:{sd.param}"
        return _run(rid, params, n, seed, threads, draw)

    return _with_window_check(run, window, n, window_check)


def estimate_cluster_sup(
    construction: ClusterConstructionSpec,
    model: ModelSpec,
    window: Window,
    n: int,
    seed: int,
    shift: ShiftDistribution | None = None,
    threads: int = 1,
    window_check: bool = False,
) -> EstimateReport:
    """``E[ sup_{t in L} ||Q(t)||^alpha ]`` for the chosen construction.

    For rejection constructions ``n`` counts accepted draws and the
    acceptance rate is reported in the diagnostics.
    """

    def run(window, n):
        Lx, _ = _lat(window, construction.lattice)

        def draw(k, rng):
            qb = construct_Q_batch(construction, model, window, k, rng, shift)
            _, st = _stats(qb, model, Lx)
            val = qb.weight * st.sup**model.alpha
            return val, qb.attempts.astype(np.float64), qb.weight, val, qb.info

        c = construction
        params = {
            "construction": c.method,
            "lattice": _lat_param(c.lattice),
            "b": c.b,
            "tau": c.tau,
            "anchor": c.anchor,
            "conditional": c.conditional,
            "denominator": c.denominator,
            "a": window.half_width,
        }
        if model.is_discrete_cluster and c.method in ("norm_z", "involution_z"):
            sd = shift or model.shift
            params["shift"] = f"{sd.kind}:{sd.param}"
        return _run(f"cluster_sup:{c.method}", params, n, seed, threads, draw)

    return _with_window_check(run, window, n, window_check)


def estimate_mixed(
    model: ModelSpec,
    L: LatticeSpec,
    window: Window,
    tau: float,
    n: int,
    seed: int,
    b: float = 1.0,
    threads: int = 1,
) -> EstimateReport:
    """Experimental: the ambient-grid index from lattice-restricted sums,

    ``(b^alpha / Delta(L)) E[ sup_V ||Y||^alpha ||Y(0)||^tau 1{M_L(Y) > b}
    / (M_L(Y)^alpha B_{L,tau}(Y)) ]``.

    Only valid when ``||Z(0)|| > 0`` almost surely, so only Brown-Resnick
    models are accepted.
    """
    if model.kind != "brown_resnick":
        raise ConfigurationError("the mixed representation needs ||Z(0)|| > 0 a.s. (brown_resnick only)")
    check_tau(model, tau)
    Lx, delta = _lat(window, L)
    full = lattice_of(window, None)

    def draw(k, rng):
        yb = sample_Y_batch(model, window, k, rng)
        x, st = _stats(yb, model, Lx, tau, 1.0)
        _, sv = _stats(yb, model, full)
        y0 = x[:, window.center]
        a = model.alpha
        val = b**a / delta * sv.sup**a * y0**tau * (st.sup > b) / (st.sup**a * st.b_tau)
        return val, None, None, val, {}

    return _run("mixed", {"lattice": _lat_param(L), "tau": tau, "b": b, "a": window.half_width}, n, seed, threads, draw)


def estimate_grid_limit(
    model: ModelSpec,
    L: LatticeSpec | None,
    n_list: Sequence[int],
    samples: int,
    seed: int,
    shift: ShiftDistribution | None = None,
    threads: int = 1,
) -> list[tuple[int, float, float]]:
    """``B(n) = (n delta)^{-l} E[ sup_{[0,n]^l cap L} ||Z||^alpha ]`` per ``n``.

    ``n`` is in grid units.  The sampling window is sized so that the box
    ``[0, n]^l`` lies in the region where the representer is exact.
    """
    ns = [int(v) for v in n_list]
    if any(v < 1 for v in ns) or any(b <= a for a, b in zip(ns, ns[1:])):
        raise ConfigurationError("n_list must be increasing positive integers")
    out = []
    l = model.dim_l
    for nn in ns:
        r = decay_radius(model)
        win = Window.cube(nn + 2 * r, l, model.grid_spacing)
        Lx = lattice_of(win, L)
        box = np.all((win.points >= 0) & (win.points <= nn), axis=1) & win.lattice_mask(Lx)

        def draw(k, rng, win=win, box=box, nn=nn):
            zb = sample_Z_batch(model, win, k, rng, shift)
            x = model.norm(zb.values)[:, box]
            val = x.max(axis=1) ** model.alpha / (nn * model.grid_spacing) ** l
            return val, None, None, val, {}

        rep = _run("grid_limit", {"lattice": _lat_param(L), "n": nn}, samples, seed, threads, draw)
        out.append((nn, rep.value, rep.stderr))
    return out


def estimate_m_approx(
    model: ModelSpec,
    m: float,
    n: int,
    seed: int,
    construction: ClusterConstructionSpec | None = None,
    scale: int = 256,
    window: Window | None = None,
    threads: int = 1,
) -> EstimateReport:
    """Truncation error ``scale^{-l} E[ sup_{t in scale*K} ||Z_N(t) - Z_N^{(m)}(t)||^alpha ]``.

    ``K = [0, 1]^l``, ``Z_N(t) = Q(t - N) / p(N)^{1/alpha}`` and
    ``Z_N^{(m)}`` uses the truncated cluster ``Q 1{|t|_1 <= m}``.  ``N`` is
    uniform on the grid box ``[-a, scale + a]^l`` (``a`` the window
    half-width), which contains every shift for which the window of ``Q``
    meets ``scale*K``, so the estimator has no truncation bias beyond that of
    ``Q`` itself.
    """
    construction = construction or ClusterConstructionSpec("involution_theta")
    if window is None:
        r = decay_radius(model)
        window = Window.cube(32 if model.kind == "brown_resnick" else max(2 * r + 2, 8), model.dim_l, model.grid_spacing)
    if scale < 1:
        raise ConfigurationError("scale must be >= 1")
    l = model.dim_l
    a = np.asarray(window.half_width)
    pts = window.points
    h = model.grid_spacing
    box = float(np.prod(scale + 2 * a + 1)) * h**l

    def draw(k, rng):
        qb = construct_Q_batch(construction, model, window, k, rng)
        d = model.norm(qb.values - m_truncate(qb, m).values) ** model.alpha
        N = rng.integers(-a, scale + a + 1, size=(k, l))
        # t = u + N must lie in [0, scale]^l
        tt = pts[None, :, :] + N[:, None, :]
        inside = np.all((tt >= 0) & (tt <= scale), axis=2)
        sup = np.where(inside, d, 0.0).max(axis=1)
        val = qb.weight * box * sup / (scale * h) ** l
        return val, qb.attempts.astype(np.float64), qb.weight, val, qb.info

    params = {"construction": construction.method, "m": m, "scale": scale, "a": window.half_width}
    return _run("m_approx", params, n, seed, threads, draw)


def pareto_conditional_check(
    model: ModelSpec, L: LatticeSpec | None, window: Window, b: float, n_conditional: int, seed: int
) -> dict:
    """KS distance of ``M_L(Y) / b`` given ``{J(Y) = 0, M_L(Y) > b}`` to the
    Pareto law ``1 - s^{-alpha}``, with ``J`` the first exceedance.
    """
    if not b >= 1:
        raise ConfigurationError("b must be >= 1")
    Lx, _ = _lat(window, L)
    rng = RandomStream(seed, 0, purpose_key("pareto", b)).generator()

    def propose(k, g):
        return sample_Y_batch(model, window, k, g)

    def accept(yb):
        st = _stats(yb, model, Lx)[1]
        return (st.first_exc == window.center) & (st.sup > b)

    acc = rejection_batch(propose, accept, n_conditional, rng, 10_000)
    m = _stats(acc, model, Lx)[1].sup / b
    a = model.alpha
    ks = sps.kstest(m, lambda s: 1.0 - np.maximum(s, 1.0) ** (-a))
    return {
        "ks": float(ks.statistic),
        "p_value": float(ks.pvalue),
        "n": int(len(m)),
        "min_ratio": float(m.min()),
        "acceptance_rate": acc.info["acceptance_rate"],
    }


def consistency_report(reports: Sequence[EstimateReport], threshold: float = 5.0, flag_from: float = 4.0) -> ConsistencyVerdict:
    """Pairwise z-scores; PASS iff every ``|z| < threshold``.

    Pairs with ``|z|`` in ``[flag_from, threshold)`` are counted as flagged.
    ``0/0`` is read as 0, and differences below a relative rounding
    tolerance of ``1e-10`` count as zero.
    """
    if len(reports) < 2:
        raise ConfigurationError("consistency_report needs at least two reports")
    pairs = []
    for i in range(len(reports)):
        for j in range(i + 1, len(reports)):
            ri, rj = reports[i], reports[j]
            diff = ri.value - rj.value
            if abs(diff) <= 1e-10 * max(abs(ri.value), abs(rj.value)):
                diff = 0.0
            se = math.hypot(ri.stderr, rj.stderr)
            z = 0.0 if diff == 0 else (diff / se if se > 0 else math.copysign(math.inf, diff))
            pairs.append({"a": _label(ri), "b": _label(rj), "z": z})
    zs = [abs(p["z"]) for p in pairs]
    flagged = sum(flag_from <= z < threshold for z in zs)
    ok = all(z < threshold for z in zs)
    return ConsistencyVerdict(pairs, max(zs), flagged, "PASS" if ok else "FAIL")


def _label(r: EstimateReport) -> str:
    keys = [k for k in ("construction", "tau", "b", "shift") if k in r.params]
    extra = ",".join(f"{k}={r.params[k]}" for k in keys)
    return f"{r.representation_id}({extra})" if extra else r.representation_id


REPRESENTATIONS = ("samorodnitsky", "berman", "albin", "difference", "difference_z", "cluster_sup", "mixed")


def parse_representation(name: str) -> tuple[str, dict]:
    """Split ``"base:key=value,..."`` into the base name and parameters.

    ``cluster_sup`` takes the construction method as its first item, e.g.
    ``"cluster_sup:anchor_y,anchor=infargsup"``.
    """
    base, _, rest = name.partition(":")
    if base not in REPRESENTATIONS:
        raise ConfigurationError(f"unknown representation {base!r}; choose from {', '.join(REPRESENTATIONS)}")
    params: dict = {}
    items = [p for p in rest.split(",") if p] if rest else []
    if base == "cluster_sup":
        if not items or "=" in items[0]:
            raise ConfigurationError("cluster_sup needs a construction, e.g. cluster_sup:norm_theta")
        params["method"] = items.pop(0)
    for item in items:
        key, eq, value = item.partition("=")
        if not eq:
            raise ConfigurationError(f"bad representation parameter {item!r}")
        if key in ("tau", "b"):
            params[key] = float(value)
        elif key in ("conditional", "experimental"):
            params[key] = value.lower() in ("1", "true", "yes")
        elif key in ("anchor", "variant", "denominator"):
            params[key] = value
        else:
            raise ConfigurationError(f"unknown representation parameter {key!r}")
    return base, params


def standard_representations(model: ModelSpec) -> list[str]:
    """The representation list used by ``--rep all``."""
    reps = ["samorodnitsky", "berman:tau=0", f"berman:tau={model.alpha:g}", "albin:b=1", "albin:b=2", "difference"]
    if model.is_discrete_cluster:
        reps.append("difference_z")
    from .cluster import METHODS

    reps += [f"cluster_sup:{m}" for m in METHODS]
    return reps


def run_representation(
    name: str,
    model: ModelSpec,
    L: LatticeSpec | None,
    window: Window,
    n: int,
    seed: int,
    threads: int = 1,
    shift: ShiftDistribution | None = None,
    window_check: bool = False,
) -> EstimateReport:
    """Dispatch a representation name (see :func:`parse_representation`)."""
    base, p = parse_representation(name)
    common = dict(n=n, seed=seed, threads=threads, window_check=window_check)
    if base == "samorodnitsky":
        rep = estimate_samorodnitsky(model, L, window, **common)
    elif base == "berman":
        rep = estimate_berman(model, L, window, p.get("tau", 0.0), b=p.get("b", 1.0), variant=p.get("variant", "corrected"),
                              experimental=p.get("experimental", False), **common)
    elif base == "albin":
        rep = estimate_albin(model, L, window, p.get("b", 1.0), **common)
    elif base in ("difference", "difference_z"):
        rep = estimate_difference(model, L, window, use_Z=base == "difference_z", shift=shift, **common)
    elif base == "mixed":
        rep = estimate_mixed(model, L, window, p.get("tau", 0.0), n, seed, b=p.get("b", 1.0), threads=threads)
    else:
        cons = ClusterConstructionSpec(
            p["method"], lattice=L, b=p.get("b", 1.0), tau=p.get("tau", 0.0), anchor=p.get("anchor", "first_exceedance"),
            conditional=p.get("conditional", False), denominator=p.get("denominator", "Y"),
        )
        rep = estimate_cluster_sup(cons, model, window, shift=shift, **common)
    rep.params["name"] = name
    return rep
