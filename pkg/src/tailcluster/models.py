"""Field laws: Brown-Resnick, AR(1) tail chain, moving maxima, tabulated Q.

Samplers come in two flavours.  The ``*_batch`` functions take a numpy
``Generator`` and return arrays for ``n`` draws at once; they are what the
estimators use.  ``sample_Z``, ``sample_Theta`` and ``sample_Y`` wrap them
for a single draw and return :class:`~tailcluster.field.FieldSample` or
:class:`WeightedDraw` objects.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ConfigurationError, ContractViolation, NumericalFailure
from .field import FieldSample, NormSpec, Window
from .rng import RandomStream

__all__ = [
    "ModelSpec",
    "ShiftDistribution",
    "WeightedDraw",
    "Batch",
    "validate_dissipative",
    "cluster_table",
    "decay_radius",
    "resolve_shift",
    "shifted_cluster_batch",
    "gaussian_factor",
    "variogram",
    "sample_Z_batch",
    "sample_Theta_batch",
    "sample_Y_batch",
    "sample_Theta_tilted_batch",
    "pareto_radii",
    "sample_Z",
    "sample_Theta",
    "sample_Y",
]

KINDS = ("brown_resnick", "ar1_tail_chain", "moving_max", "deterministic_q")
JITTERS = (0.0, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6)


@dataclass(frozen=True)
class ShiftDistribution:
    """Law of the random shift ``N`` on a finite box ``[-s, s]^l``.

    Parameters
    ----------
    kind : str
        ``"uniform_window"``, ``"symmetric_geometric_product"`` (weights
        ``prod_i rho^|t_i|``) or ``"truncated_gaussian_grid"`` (weights
        ``exp(-|t|^2 / (2 sigma^2))``).
    param : float
        ``rho`` in (0, 1) or ``sigma`` > 0; ignored for the uniform law.
    half_width : int or None
        Box half-width ``s``.  ``None`` lets the caller pick the largest box
        that keeps shifted cluster support inside the sampling window.
    """

    kind: str = "uniform_window"
    param: float = 0.8
    half_width: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("uniform_window", "symmetric_geometric_product", "truncated_gaussian_grid"):
            raise ConfigurationError(f"unknown shift distribution {self.kind!r}")
        if self.kind == "symmetric_geometric_product" and not 0 < self.param < 1:
            raise ConfigurationError("geometric shift parameter must lie in (0, 1)")
        if self.kind == "truncated_gaussian_grid" and not self.param > 0:
            raise ConfigurationError("gaussian shift scale must be positive")
        if self.half_width is not None and int(self.half_width) < 0:
            raise ConfigurationError("shift box half-width must be nonnegative")

    def with_half_width(self, s: int) -> "ShiftDistribution":
        return ShiftDistribution(self.kind, self.param, int(s))

    def support(self, dim: int) -> np.ndarray:
        if self.half_width is None:
            raise ConfigurationError("shift box half-width is unresolved")
        return Window.cube(self.half_width, dim).points

    def density(self, dim: int, grid_spacing: float = 1.0) -> np.ndarray:
        """Density ``p_N`` on the support; ``sum p * delta^l = 1``."""
        pts = self.support(dim)
        if self.kind == "uniform_window":
            w = np.ones(len(pts))
        elif self.kind == "symmetric_geometric_product":
            w = self.param ** np.abs(pts).sum(axis=1)
        else:
            w = np.exp(-(pts.astype(float) ** 2).sum(axis=1) / (2.0 * self.param**2))
        return w / (w.sum() * grid_spacing**dim)


@dataclass(frozen=True)
class ModelSpec:
    """Declarative field law.

    Parameters
    ----------
    kind : str
        One of ``brown_resnick``, ``ar1_tail_chain``, ``moving_max``,
        ``deterministic_q``.
    alpha : float
        Homogeneity index.
    norm : NormSpec
    variogram : str
        ``"linear"`` for ``c ||h||_1`` or ``"power"`` for ``c |h|^{2H}``.
    variogram_slope : float
        The constant ``c``.
    hurst : float
        ``H`` of the power variogram.
    dim : int
        Index dimension ``l`` of a Brown-Resnick model.
    delta : float
        Grid spacing of a Brown-Resnick model.
    phi : float
        AR(1) coefficient in (0, 1).
    coeffs : tuple of float
        Moving-maximum coefficients ``a_0..a_k``.
    q_table : tuple
        ``((point, value), ...)`` for ``deterministic_q``; values may be
        vectors.
    shift : ShiftDistribution
        Law of ``N`` used to build ``Z`` for the discrete models.
    tail_tol : float
        Truncation tolerance of the AR(1) cluster table.
    """

    kind: str
    alpha: float = 1.0
    norm: NormSpec = field(default_factory=NormSpec)
    variogram: str = "linear"
    variogram_slope: float = 10.0
    hurst: float = 0.5
    dim: int = 1
    delta: float = 1.0
    phi: float = 0.5
    coeffs: tuple[float, ...] = ()
    q_table: tuple = ()
    shift: ShiftDistribution = field(default_factory=ShiftDistribution)
    tail_tol: float = 1e-8

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown model kind {self.kind!r}")
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ConfigurationError("alpha must be a positive finite real")
        if not 0 < self.tail_tol < 1e-3:
            raise ConfigurationError("tail_tol must lie in (0, 1e-3)")
        object.__setattr__(self, "alpha", float(self.alpha))
        if self.kind == "brown_resnick":
            if self.variogram not in ("linear", "power"):
                raise ConfigurationError("variogram must be 'linear' or 'power'")
            if not self.variogram_slope > 0:
                raise ConfigurationError("variogram slope must be positive")
            if self.dim < 1:
                raise ConfigurationError("dim must be >= 1")
            if not self.delta > 0:
                raise ConfigurationError("delta must be positive")
            if self.variogram == "power":
                if self.dim != 1:
                    raise ConfigurationError("the power variogram is supported for l = 1 only")
                if not 0 < self.hurst <= 1:
                    raise ConfigurationError("hurst must lie in (0, 1]")
        elif self.kind == "ar1_tail_chain":
            if not 0 < self.phi < 1:
                raise ConfigurationError("phi must lie in (0, 1)")
        elif self.kind == "moving_max":
            c = tuple(float(v) for v in self.coeffs)
            if not c or any(v < 0 or not math.isfinite(v) for v in c) or max(c) <= 0:
                raise ConfigurationError("moving_max coefficients must be >= 0 and not all zero")
            object.__setattr__(self, "coeffs", c)
        else:
            if not self.q_table:
                raise ConfigurationError("deterministic_q needs a nonempty q_table")
            tab = []
            for pt, val in self.q_table:
                p = (int(pt),) if np.isscalar(pt) else tuple(int(v) for v in pt)
                v = tuple(float(x) for x in np.atleast_1d(val))
                tab.append((p, v))
            if len({p for p, _ in tab}) != len(tab):
                raise ConfigurationError("duplicate point in q_table")
            if len({len(p) for p, _ in tab}) != 1 or len({len(v) for _, v in tab}) != 1:
                raise ConfigurationError("q_table points and values must have uniform dimensions")
            object.__setattr__(self, "q_table", tuple(sorted(tab)))
        if self.dim_d > 1 and self.norm.kind == "absolute":
            raise ConfigurationError("absolute-value norm requires d = 1")

    @property
    def dim_l(self) -> int:
        if self.kind == "brown_resnick":
            return self.dim
        if self.kind == "deterministic_q":
            return len(self.q_table[0][0])
        return 1

    @property
    def dim_d(self) -> int:
        if self.kind == "deterministic_q":
            return len(self.q_table[0][1])
        return 1

    @property
    def grid_spacing(self) -> float:
        return self.delta if self.kind == "brown_resnick" else 1.0

    @property
    def is_discrete_cluster(self) -> bool:
        return self.kind != "brown_resnick"


@dataclass(frozen=True)
class WeightedDraw:
    """A field sample with a nonnegative importance weight.

    ``attempts`` counts the candidate draws consumed by rejection sampling;
    exact samplers use 1.
    """

    sample: FieldSample
    weight: float = 1.0
    attempts: int = 1

    def __post_init__(self) -> None:
        if not (self.weight >= 0 and math.isfinite(self.weight)):
            raise ContractViolation("draw weight must be finite and nonnegative")


@dataclass
class Batch:
    """``n`` weighted draws on one window.

    Attributes
    ----------
    values : ndarray, shape (n, P, d)
    weight : ndarray, shape (n,)
        Importance weights (1 for exact samplers, 0 for discarded draws).
    attempts : ndarray, shape (n,)
        Candidate draws consumed per accepted draw.
    covered : ndarray of bool, shape (n, P), or None for full coverage.
    info : dict
        Sampler diagnostics.
    """

    window: Window
    values: np.ndarray
    weight: np.ndarray
    attempts: np.ndarray | None = None
    covered: np.ndarray | None = None
    info: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.attempts is None:
            self.attempts = np.ones(len(self.values), dtype=np.int64)

    def __len__(self) -> int:
        return len(self.values)

    def draw(self, i: int) -> WeightedDraw:
        cov = None if self.covered is None else self.covered[i]
        return WeightedDraw(FieldSample(self.window, self.values[i], cov), float(self.weight[i]), int(self.attempts[i]))


# ----------------------------------------------------------------------------
# Brown-Resnick


def validate_dissipative(model: ModelSpec) -> bool:
    """Sufficient pure-dissipativity condition on the variogram growth.

    True iff ``liminf gamma(h) / max|h_i| > 8 l``.  For the power variogram
    the asymptotic slope is infinite when ``H > 1/2`` and zero when
    ``H < 1/2``.
    """
    if model.kind != "brown_resnick":
        raise ConfigurationError("validate_dissipative applies to brown_resnick models only")
    c, l = model.variogram_slope, model.dim
    if model.variogram == "linear":
        # c ||h||_1 / max|h_i| has liminf c (attained along the axes)
        return c > 8 * l
    if model.hurst > 0.5:
        return True
    if model.hurst < 0.5:
        return False
    return c > 8 * l


def variogram(model: ModelSpec, pts: np.ndarray) -> np.ndarray:
    """``gamma`` at integer grid offsets ``pts`` (shape ``(m, l)``)."""
    h = np.asarray(pts, dtype=np.float64) * model.delta
    if model.variogram == "linear":
        return model.variogram_slope * np.abs(h).sum(axis=-1)
    return model.variogram_slope * np.abs(h[..., 0]) ** (2.0 * model.hurst)


@dataclass(frozen=True)
class GaussianFactor:
    chol: np.ndarray  # (P-1, P-1) lower factor, origin removed
    drift: np.ndarray  # (P,) alpha * gamma(t) / 2
    jitter: float
    others: np.ndarray  # flat indices of non-origin points


@lru_cache(maxsize=32)
def gaussian_factor(model: ModelSpec, window: Window) -> GaussianFactor:
    """Cholesky factor of the pinned Gaussian field on ``window``.

    Covariance ``(gamma(s) + gamma(t) - gamma(t - s)) / 2`` over the
    non-origin points, with jitter (relative to the mean diagonal) raised
    from 0 through ``1e-12 .. 1e-6`` until the factorization succeeds.
    """
    pts = window.points
    others = np.flatnonzero(np.any(pts != 0, axis=1))
    q = pts[others]
    gs = variogram(model, q)
    diff = q[:, None, :] - q[None, :, :]
    cov = 0.5 * (gs[:, None] + gs[None, :] - variogram(model, diff.reshape(-1, q.shape[1])).reshape(len(q), len(q)))
    scale = float(np.mean(np.diag(cov))) if len(q) else 1.0
    eye = np.eye(len(q))
    for j in JITTERS:
        try:
            chol = np.linalg.cholesky(cov + j * scale * eye)
        except np.linalg.LinAlgError:
            continue
        if np.all(np.isfinite(chol)):
            drift = 0.5 * model.alpha * variogram(model, pts)
            chol.setflags(write=False)
            drift.setflags(write=False)
            return GaussianFactor(chol, drift, j, others)
    eig = float(np.linalg.eigvalsh(cov).min()) if len(q) else 0.0
    raise NumericalFailure(
        f"covariance not positive definite after jitter {JITTERS[-1]:g} "
        f"(window {window.half_width}, smallest eigenvalue {eig:.3e})"
    )


def _br_Z(model: ModelSpec, window: Window, n: int, rng: np.random.Generator) -> np.ndarray:
    f = gaussian_factor(model, window)
    g = np.zeros((n, window.size))
    if len(f.others):
        g[:, f.others] = rng.standard_normal((n, len(f.others))) @ f.chol.T
    return np.exp(g - f.drift[None, :])[:, :, None]


# ----------------------------------------------------------------------------
# discrete cluster tables


@lru_cache(maxsize=64)
def cluster_table(model: ModelSpec) -> tuple[np.ndarray, np.ndarray]:
    """Support points ``(m, l)`` and values ``(m, d)`` of the model's
    deterministic cluster ``Q`` with ``sum ||Q||^alpha = 1``.

    For the AR(1) chain ``Q(t) = (1 - phi^alpha)^{1/alpha} phi^t`` for
    ``t >= 0``, truncated where the remaining mass drops below ``tail_tol``.
    """
    a = model.alpha
    if model.kind == "moving_max":
        v = np.asarray(model.coeffs)
        pts = np.arange(len(v))[:, None]
        vals = v[:, None] / np.sum(v**a) ** (1.0 / a)
    elif model.kind == "ar1_tail_chain":
        pa = model.phi**a
        r = int(math.ceil(math.log(model.tail_tol) / math.log(pa)))  # pa^r <= tol
        t = np.arange(r)
        pts = t[:, None]
        vals = ((1.0 - pa) ** (1.0 / a) * model.phi**t)[:, None]
    elif model.kind == "deterministic_q":
        pts = np.array([p for p, _ in model.q_table], dtype=np.int64)
        raw = np.array([v for _, v in model.q_table], dtype=np.float64)
        s = float(np.sum(model.norm(raw) ** a))
        if s <= 0:
            raise ConfigurationError("deterministic_q table is identically zero")
        vals = raw / s ** (1.0 / a)
    else:
        raise ConfigurationError("brown_resnick has no deterministic cluster table")
    keep = model.norm(vals) > 0
    pts, vals = pts[keep].astype(np.int64), vals[keep]
    pts.setflags(write=False)
    vals.setflags(write=False)
    return pts, vals


def decay_radius(model: ModelSpec) -> int:
    """Sup-norm radius of the cluster table support (0 for Brown-Resnick)."""
    if model.kind == "brown_resnick":
        return 0
    pts, _ = cluster_table(model)
    return int(np.abs(pts).max())


def resolve_shift(model: ModelSpec, window: Window, shift: ShiftDistribution | None = None) -> ShiftDistribution:
    """Fill in the shift box so that shifted cluster support fits the window."""
    sd = shift or model.shift
    if sd.half_width is not None:
        return sd
    s = min(window.half_width) - decay_radius(model)
    if s < 0:
        raise ConfigurationError(
            f"window half-width {min(window.half_width)} is smaller than the cluster radius {decay_radius(model)}"
        )
    return sd.with_half_width(s)


@lru_cache(maxsize=64)
def _shifted_tables(model: ModelSpec, window: Window, shift: ShiftDistribution):
    """Fields ``B^n Q`` on the window for each box point ``n``, plus ``p_N``."""
    pts, vals = cluster_table(model)
    box = shift.support(model.dim_l)
    dens = shift.density(model.dim_l, window.grid_spacing)
    table = np.zeros((len(box), window.size, model.dim_d))
    escaped = 0.0
    for i, nvec in enumerate(box):
        idx = window.index_of(pts + nvec[None, :])
        ok = idx >= 0
        table[i, idx[ok]] = vals[ok]
        escaped = max(escaped, float(np.sum(model.norm(vals[~ok]) ** model.alpha)))
    cdf = np.cumsum(dens * window.grid_spacing ** model.dim_l)
    cdf /= cdf[-1]
    table.setflags(write=False)
    return table, dens, cdf, escaped


def shifted_cluster_batch(
    model: ModelSpec, window: Window, n: int, rng: np.random.Generator, shift: ShiftDistribution | None = None
) -> tuple[np.ndarray, np.ndarray, dict]:
    """``Z_N = B^N Q / p_N(N)^{1/alpha}`` for the deterministic cluster."""
    sd = resolve_shift(model, window, shift)
    table, dens, cdf, escaped = _shifted_tables(model, window, sd)
    k = np.minimum(np.searchsorted(cdf, rng.random(n), side="right"), len(cdf) - 1)
    z = table[k] * (dens[k] ** (-1.0 / model.alpha))[:, None, None]
    info = {"shift": sd.kind, "shift_half_width": sd.half_width, "escaped_mass": escaped}
    return z, k, info


@lru_cache(maxsize=64)
def _theta_tables(model: ModelSpec, window: Window) -> tuple[np.ndarray, np.ndarray]:
    """Spectral tail fields ``Q(J + .) / ||Q(J)||`` and the law of ``J``."""
    pts, vals = cluster_table(model)
    nv = model.norm(vals)
    probs = nv**model.alpha
    probs = probs / probs.sum()
    table = np.zeros((len(pts), window.size, model.dim_d))
    for j in range(len(pts)):
        idx = window.index_of(pts - pts[j][None, :])
        ok = idx >= 0
        table[j, idx[ok]] = vals[ok] / nv[j]
    table.setflags(write=False)
    return table, np.cumsum(probs)


@lru_cache(maxsize=64)
def _ar1_theta_table(phi: float, window: Window) -> np.ndarray:
    a = window.half_width[0]
    t = window.points[:, 0]
    tab = np.zeros((a + 1, window.size))
    for k in range(a + 1):
        tab[k] = np.where(t >= -k, phi ** t.astype(float), 0.0)
    tab.setflags(write=False)
    return tab


# ----------------------------------------------------------------------------
# batch samplers


def _check_window(model: ModelSpec, window: Window) -> None:
    if window.dim != model.dim_l:
        raise ConfigurationError(f"window dimension {window.dim} does not match model dimension {model.dim_l}")
    if abs(window.grid_spacing - model.grid_spacing) > 1e-15 * model.grid_spacing:
        raise ConfigurationError("window grid spacing does not match the model")


def pareto_radii(alpha: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """``R = U^{-1/alpha}`` with ``U`` uniform on (0, 1]."""
    u = 1.0 - rng.random(n)
    return u ** (-1.0 / alpha)


def sample_Z_batch(
    model: ModelSpec, window: Window, n: int, rng: np.random.Generator, shift: ShiftDistribution | None = None
) -> Batch:
    """``n`` draws of the representer ``Z``.

    Brown-Resnick draws are pinned at the origin; discrete models use the
    random-shift construction with the model's (or the given) shift law.
    """
    _check_window(model, window)
    if model.kind == "brown_resnick":
        z = _br_Z(model, window, n, rng)
        return Batch(window, z, np.ones(n), info={"jitter": gaussian_factor(model, window).jitter})
    z, _, info = shifted_cluster_batch(model, window, n, rng, shift)
    return Batch(window, z, np.ones(n), info=info)


def sample_Theta_batch(model: ModelSpec, window: Window, n: int, rng: np.random.Generator) -> Batch:
    """Exact spectral tail draws (all weights 1)."""
    _check_window(model, window)
    if model.kind == "brown_resnick":
        z = _br_Z(model, window, n, rng)
        if not np.all(z[:, window.center, 0] == 1.0):  # pragma: no cover - guards the pinning
            raise ContractViolation("pinned Brown-Resnick draw with Z(0) != 1")
        return Batch(window, z, np.ones(n))
    if model.kind == "ar1_tail_chain":
        k = rng.geometric(1.0 - model.phi**model.alpha, size=n) - 1
        tab = _ar1_theta_table(model.phi, window)
        kk = np.minimum(k, window.half_width[0])
        return Batch(window, tab[kk][:, :, None], np.ones(n), info={"kill_depth": k})
    table, cdf = _theta_tables(model, window)
    j = np.minimum(np.searchsorted(cdf, rng.random(n), side="right"), len(cdf) - 1)
    return Batch(window, table[j], np.ones(n), info={"anchor_index": j})


def sample_Theta_tilted_batch(
    model: ModelSpec, window: Window, n: int, rng: np.random.Generator, shift: ShiftDistribution | None = None
) -> Batch:
    """Spectral tail via importance weights ``||Z(0)||^alpha`` on ``Z`` draws.

    Works for any representer; draws with ``Z(0) = 0`` get weight 0.
    """
    zb = sample_Z_batch(model, window, n, rng, shift)
    z0 = model.norm(zb.values[:, window.center])
    w = z0**model.alpha
    with np.errstate(divide="ignore", invalid="ignore"):
        theta = np.where((z0 > 0)[:, None, None], zb.values / np.where(z0 > 0, z0, 1.0)[:, None, None], 0.0)
    return Batch(window, theta, w, info=dict(zb.info))


def sample_Y_batch(model: ModelSpec, window: Window, n: int, rng: np.random.Generator) -> Batch:
    """Tail field ``Y = R Theta`` with an independent Pareto radius."""
    tb = sample_Theta_batch(model, window, n, rng)
    r = pareto_radii(model.alpha, n, rng)
    tb.values = tb.values * r[:, None, None]
    tb.info["radius"] = r
    return tb


# ----------------------------------------------------------------------------
# single-draw API


def _one(batch: Batch) -> FieldSample:
    return batch.draw(0).sample


def sample_Z(model: ModelSpec, window: Window, stream: RandomStream, shift: ShiftDistribution | None = None) -> FieldSample:
    """One draw of ``Z`` as a :class:`FieldSample`."""
    return _one(sample_Z_batch(model, window, 1, stream.generator(), shift))


def sample_Theta(model: ModelSpec, window: Window, stream: RandomStream) -> WeightedDraw:
    """One exact spectral tail draw."""
    return sample_Theta_batch(model, window, 1, stream.generator()).draw(0)


def sample_Y(model: ModelSpec, window: Window, stream: RandomStream) -> WeightedDraw:
    """One tail field draw."""
    return sample_Y_batch(model, window, 1, stream.generator()).draw(0)
