"""Finite-window fields, the back-shift, norms and path functionals.

A window ``W = [-a, a]^l`` on the grid ``delta Z^l`` is flattened in
C order, which coincides with the lexicographic order on coordinates.  The
origin therefore sits at flat index ``center`` and "``s`` precedes ``t``" is
simply "flat index of ``s`` < flat index of ``t``" for points of one window.
This order is total and shift-invariant, which is all the argmax and
first-exceedance maps require.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import kernels
from .errors import ConfigurationError
from .lattice import LatticeSpec, contains_many

__all__ = [
    "Window",
    "NormSpec",
    "OrderSpec",
    "FieldSample",
    "PathStats",
    "shift",
    "shift_batch",
    "sum_alpha",
    "exceedance_sum",
    "sup_norm",
    "infargsup",
    "first_exceedance",
    "restricted_norms",
    "path_stats",
]

NONE = None  # returned by the point-picking maps when nothing qualifies


@dataclass(frozen=True)
class Window:
    """The box ``[-a, a]^l`` of grid points.

    Parameters
    ----------
    half_width : tuple of int
        Per-axis half-width ``a`` in grid units.
    grid_spacing : float
        Physical spacing ``delta``.
    """

    half_width: tuple[int, ...]
    grid_spacing: float = 1.0

    def __post_init__(self) -> None:
        hw = tuple(int(v) for v in np.atleast_1d(self.half_width))
        if not hw or any(v < 0 for v in hw):
            raise ConfigurationError("window half-widths must be nonnegative integers")
        if not self.grid_spacing > 0:
            raise ConfigurationError("grid spacing must be positive")
        object.__setattr__(self, "half_width", hw)
        object.__setattr__(self, "grid_spacing", float(self.grid_spacing))

    @classmethod
    def cube(cls, a: int, dim: int = 1, grid_spacing: float = 1.0) -> "Window":
        return cls((a,) * dim, grid_spacing)

    @property
    def dim(self) -> int:
        return len(self.half_width)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(2 * a + 1 for a in self.half_width)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def center(self) -> int:
        return self.size // 2

    @property
    def cell_volume(self) -> float:
        return self.grid_spacing ** self.dim

    @cached_property
    def points(self) -> np.ndarray:
        """Integer coordinates of all points, shape ``(P, l)``, lexicographic."""
        grids = np.indices(self.shape).reshape(self.dim, -1).T
        pts = grids - np.asarray(self.half_width)[None, :]
        pts.setflags(write=False)
        return pts

    def index_of(self, pts: Sequence[int] | np.ndarray) -> np.ndarray:
        """Flat indices of points (``-1`` for points outside the window)."""
        p = np.atleast_2d(np.asarray(pts, dtype=np.int64))
        if p.shape[1] != self.dim:
            raise ConfigurationError("point dimension does not match the window")
        hw = np.asarray(self.half_width)
        inside = np.all(np.abs(p) <= hw, axis=1)
        shifted = np.where(inside[:, None], p + hw, 0)
        flat = np.ravel_multi_index(shifted.T, self.shape)
        return np.where(inside, flat, -1)

    def contains_point(self, pt: Sequence[int]) -> bool:
        return bool(self.index_of(pt)[0] >= 0)

    def lattice_mask(self, lattice: LatticeSpec | None) -> np.ndarray:
        """Boolean mask of window points belonging to ``lattice``."""
        if lattice is None or lattice.is_identity:
            return np.ones(self.size, dtype=bool)
        if lattice.ambient_dim != self.dim:
            raise ConfigurationError("lattice and window dimensions differ")
        return contains_many(lattice, self.points)

    def radius_mask(self, r: float, ord: float = 1) -> np.ndarray:
        """Points with ``||t|| <= r`` for the chosen integer-vector norm."""
        return np.linalg.norm(self.points, ord=ord, axis=1) <= r

    def enlarge(self, factor: int = 2) -> "Window":
        return Window(tuple(factor * a for a in self.half_width), self.grid_spacing)


@dataclass(frozen=True)
class NormSpec:
    """A 1-homogeneous continuous norm on ``R^d``.

    ``kind`` is one of ``"absolute"``, ``"euclidean"``, ``"max"`` and
    ``"weighted_sum"``; the last one takes positive ``weights``.
    """

    kind: str = "euclidean"
    weights: tuple[float, ...] = ()

    _KINDS = ("absolute", "euclidean", "max", "weighted_sum")

    def __post_init__(self) -> None:
        if self.kind not in self._KINDS:
            raise ConfigurationError(f"unknown norm kind {self.kind!r}")
        if self.kind == "weighted_sum":
            if not self.weights or any(not w > 0 for w in self.weights):
                raise ConfigurationError("weighted_sum norm needs positive weights")
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))

    def __call__(self, values: np.ndarray) -> np.ndarray:
        """Norm over the last axis of ``values``."""
        v = np.asarray(values, dtype=np.float64)
        if self.kind == "absolute":
            if v.shape[-1] != 1:
                raise ConfigurationError("absolute-value norm requires d = 1")
            return np.abs(v[..., 0])
        if v.shape[-1] == 1:
            w = self.weights[0] if self.kind == "weighted_sum" else 1.0
            return w * np.abs(v[..., 0])
        if self.kind == "euclidean":
            # scale by the largest component so tiny or huge entries keep
            # full relative precision
            m = np.abs(v).max(axis=-1)
            safe = np.where(m > 0, m, 1.0)[..., None]
            u = v / safe
            return m * np.sqrt(np.einsum("...i,...i->...", u, u))
        if self.kind == "max":
            return np.abs(v).max(axis=-1)
        w = np.asarray(self.weights)
        if w.size != v.shape[-1]:
            raise ConfigurationError("weight count does not match d")
        return np.abs(v) @ w


@dataclass(frozen=True)
class OrderSpec:
    """Lexicographic order on ``Z^l``; total and shift-invariant."""

    @staticmethod
    def less(s: Sequence[int], t: Sequence[int]) -> bool:
        return tuple(int(v) for v in s) < tuple(int(v) for v in t)


@dataclass(frozen=True)
class FieldSample:
    """One realization on a window.

    Parameters
    ----------
    window : Window
    values : ndarray, shape (P, d)
        Values in lexicographic window order.  Entries at uncovered points
        are ignored (stored as zero).
    covered : ndarray of bool, shape (P,)
    """

    window: Window
    values: np.ndarray
    covered: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=np.float64)
        if v.ndim == 1:
            v = v[:, None]
        if v.shape[0] != self.window.size:
            raise ConfigurationError("values do not match the window size")
        cov = (
            np.ones(self.window.size, dtype=bool)
            if self.covered is None
            else np.array(self.covered, dtype=bool)
        )
        if cov.shape != (self.window.size,):
            raise ConfigurationError("coverage mask has the wrong shape")
        v[~cov] = 0.0
        if not np.all(np.isfinite(v)):
            raise ConfigurationError("field values must be finite")
        v.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "covered", cov)

    @classmethod
    def from_mapping(
        cls,
        mapping: Mapping[int | tuple[int, ...], float | Sequence[float]],
        window: Window | None = None,
        grid_spacing: float = 1.0,
    ) -> "FieldSample":
        """Build a sample from ``{point: value}``; unspecified points are
        uncovered.  Scalar keys mean ``l = 1``.  Without ``window`` the smallest
        symmetric box holding every key is used.
        """
        keys = [(k,) if np.isscalar(k) else tuple(k) for k in mapping]
        vals = [np.atleast_1d(np.asarray(v, dtype=np.float64)) for v in mapping.values()]
        dim = len(keys[0]) if keys else 1
        d = len(vals[0]) if vals else 1
        if window is None:
            a = max((max(abs(c) for c in k) for k in keys), default=0)
            window = Window.cube(a, dim, grid_spacing)
        values = np.zeros((window.size, d))
        covered = np.zeros(window.size, dtype=bool)
        idx = window.index_of(np.array(keys, dtype=np.int64).reshape(-1, dim))
        if np.any(idx < 0):
            raise ConfigurationError("a mapping key lies outside the window")
        values[idx] = np.array(vals).reshape(-1, d)
        covered[idx] = True
        return cls(window, values, covered)

    @property
    def dim_l(self) -> int:
        return self.window.dim

    @property
    def dim_d(self) -> int:
        return self.values.shape[1]

    @property
    def grid_spacing(self) -> float:
        return self.window.grid_spacing

    def value_at(self, pt: Sequence[int] | int) -> np.ndarray | None:
        idx = int(self.window.index_of(np.atleast_1d(pt))[0])
        if idx < 0 or not self.covered[idx]:
            return None
        return self.values[idx]

    def to_mapping(self) -> dict[tuple[int, ...], np.ndarray]:
        pts = self.window.points
        return {tuple(int(c) for c in pts[i]): self.values[i] for i in np.flatnonzero(self.covered)}

    def scaled(self, c: float) -> "FieldSample":
        return FieldSample(self.window, c * self.values, self.covered)

    def csv_rows(self) -> Iterable[list[float]]:
        """Rows ``t_1..t_l, v_1..v_d`` for covered points."""
        pts = self.window.points
        for i in np.flatnonzero(self.covered):
            yield [int(c) for c in pts[i]] + [float(x) for x in self.values[i]]


# ----------------------------------------------------------------------------
# shifting


def _shift_slices(shape: tuple[int, ...], h: Sequence[int]):
    src, dst = [], []
    for n, s in zip(shape, h):
        s = int(s)
        if abs(s) >= n:
            return None
        if s >= 0:
            src.append(slice(0, n - s))
            dst.append(slice(s, n))
        else:
            src.append(slice(-s, n))
            dst.append(slice(0, n + s))
    return tuple(src), tuple(dst)


def shift_batch(
    window: Window, values: np.ndarray, covered: np.ndarray | None, h: Sequence[int]
) -> tuple[np.ndarray, np.ndarray]:
    """Back-shift ``g(t) = f(t - h)`` for a batch.

    Parameters
    ----------
    values : ndarray, shape (n, P, d)
    covered : ndarray of bool, shape (n, P) or None
    h : sequence of int

    Returns
    -------
    values, covered : ndarray
        Shifted arrays on the same window; points whose preimage left the
        window become uncovered (value zero).
    """
    n, p, d = values.shape
    if covered is None:
        covered = np.ones((n, p), dtype=bool)
    h = tuple(int(v) for v in np.atleast_1d(h))
    if len(h) != window.dim:
        raise ConfigurationError("shift has the wrong dimension")
    out_v = np.zeros_like(values)
    out_c = np.zeros_like(covered)
    sl = _shift_slices(window.shape, h)
    if sl is not None:
        src, dst = sl
        vv = values.reshape((n,) + window.shape + (d,))
        cc = covered.reshape((n,) + window.shape)
        ov = out_v.reshape(vv.shape)
        oc = out_c.reshape(cc.shape)
        ov[(slice(None),) + dst] = vv[(slice(None),) + src]
        oc[(slice(None),) + dst] = cc[(slice(None),) + src]
    return out_v, out_c


def shift(f: FieldSample, h: Sequence[int] | int) -> FieldSample:
    """Back-shift ``B^h f`` with ``(B^h f)(t) = f(t - h)``.

    Examples
    --------
    >>> f = FieldSample.from_mapping({-1: 1.0, 0: 2.0, 1: 3.0})
    >>> {k: float(v[0]) for k, v in shift(f, 1).to_mapping().items()}
    {(0,): 1.0, (1,): 2.0}
    """
    v, c = shift_batch(f.window, f.values[None], f.covered[None], np.atleast_1d(h))
    return FieldSample(f.window, v[0], c[0])


# ----------------------------------------------------------------------------
# functionals


def restricted_norms(
    window: Window,
    values: np.ndarray,
    covered: np.ndarray | None,
    lattice: LatticeSpec | None,
    norm: NormSpec,
) -> np.ndarray:
    """Norms on ``L ∩ coverage`` with zeros elsewhere; shape ``(n, P)``."""
    x = norm(values)
    mask = window.lattice_mask(lattice)
    if covered is not None:
        x = np.where(covered & mask[None, :], x, 0.0)
    elif not mask.all():
        x = np.where(mask[None, :], x, 0.0)
    return np.ascontiguousarray(x)


@dataclass(frozen=True)
class PathStats:
    """Per-draw path functionals for a batch (counting measure)."""

    s_alpha: np.ndarray
    b_tau: np.ndarray
    sup: np.ndarray
    argsup: np.ndarray
    first_exc: np.ndarray
    sup_after: np.ndarray
    sup_from: np.ndarray


def path_stats(x: np.ndarray, center: int, alpha: float, tau: float = 0.0, b: float = 1.0) -> PathStats:
    """Evaluate the fused kernel on a restricted norm array ``x``."""
    return PathStats(*kernels.path_stats(np.ascontiguousarray(x, dtype=np.float64), float(alpha), float(tau), float(b), int(center)))


def _norms1(f: FieldSample, lattice, norm) -> np.ndarray:
    if lattice is None:
        lattice = LatticeSpec.identity(f.dim_l, f.grid_spacing)
    return restricted_norms(f.window, f.values[None], f.covered[None], lattice, norm)


def sum_alpha(f: FieldSample, lattice: LatticeSpec | None, alpha: float, norm: NormSpec = NormSpec()) -> float:
    """``sum_{t in L ∩ coverage} ||f(t)||^alpha * delta^l``.

    >>> sum_alpha(FieldSample.from_mapping({0: 1.0, 1: 2.0}), None, 2.0)
    5.0
    """
    if not alpha > 0:
        raise ConfigurationError("alpha must be positive")
    st = path_stats(_norms1(f, lattice, norm), f.window.center, alpha)
    return float(st.s_alpha[0]) * f.window.cell_volume


def exceedance_sum(
    f: FieldSample, lattice: LatticeSpec | None, tau: float, b: float = 1.0, norm: NormSpec = NormSpec()
) -> float:
    """``sum ||b f(t)||^tau 1{||b f(t)|| >= 1} * delta^l`` over ``L ∩ coverage``."""
    if not b > 0:
        raise ConfigurationError("threshold scale b must be positive")
    st = path_stats(_norms1(f, lattice, norm), f.window.center, 1.0, tau, b)
    return float(st.b_tau[0]) * f.window.cell_volume


def sup_norm(f: FieldSample, lattice: LatticeSpec | None, norm: NormSpec = NormSpec()) -> float:
    """Largest norm over ``L ∩ coverage`` (0 on the empty set)."""
    x = _norms1(f, lattice, norm)
    return float(x.max()) if x.size else 0.0


def _point(f: FieldSample, idx: int):
    if idx < 0:
        return NONE
    pt = tuple(int(c) for c in f.window.points[idx])
    return pt[0] if f.dim_l == 1 else pt


def infargsup(f: FieldSample, lattice: LatticeSpec | None, norm: NormSpec = NormSpec()):
    """Lexicographically least maximizer of the norm, or ``None`` if the
    supremum is 0.  Points are returned as ints when ``l = 1``.
    """
    st = path_stats(_norms1(f, lattice, norm), f.window.center, 1.0)
    return _point(f, int(st.argsup[0]))


def first_exceedance(f: FieldSample, lattice: LatticeSpec | None, norm: NormSpec = NormSpec()):
    """Lexicographically least point with norm strictly above 1, or ``None``."""
    st = path_stats(_norms1(f, lattice, norm), f.window.center, 1.0)
    return _point(f, int(st.first_exc[0]))
