"""Full-rank sublattices of the integer grid.

A lattice is stored by an integer base matrix ``A`` whose columns generate
it, expressed in units of the ambient grid spacing ``delta``.  Membership and
coset enumeration use exact integer arithmetic through the Hermite normal
form, so no floating point drift can creep into lattice bookkeeping.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import ConfigurationError

__all__ = [
    "LatticeSpec",
    "CosetTable",
    "covolume",
    "quotient_index",
    "coset_representatives",
    "contains",
    "contains_many",
    "hermite_normal_form",
    "parse_lattice",
]


def _int_det(rows: Sequence[Sequence[int]]) -> int:
    """Exact determinant by fraction-valued Gaussian elimination."""
    m = [[Fraction(v) for v in r] for r in rows]
    n = len(m)
    det = Fraction(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if m[r][c] != 0), None)
        if piv is None:
            return 0
        if piv != c:
            m[c], m[piv] = m[piv], m[c]
            det = -det
        det *= m[c][c]
        for r in range(c + 1, n):
            f = m[r][c] / m[c][c]
            if f:
                for k in range(c, n):
                    m[r][k] -= f * m[c][k]
    return int(det)


def hermite_normal_form(base: Sequence[Sequence[int]]) -> tuple[tuple[int, ...], ...]:
    """Lower-triangular column-style Hermite normal form.

    Unimodular column operations reduce ``A`` to ``H`` with ``H[i][j] = 0``
    for ``j > i``, positive diagonal and ``0 <= H[i][j] < H[i][i]`` for
    ``j < i``.  ``H`` generates the same lattice as ``A`` and is unique, so
    two bases of one lattice share their normal form.

    Parameters
    ----------
    base : sequence of sequences of int
        Square integer matrix, rows first.

    Returns
    -------
    tuple of tuples
        The normal form, rows first.
    """
    a = [list(map(int, r)) for r in base]
    n = len(a)
    for i in range(n):
        # gcd-style elimination on row i across columns i..n-1
        while True:
            nz = [j for j in range(i, n) if a[i][j] != 0]
            if not nz:
                raise ConfigurationError("singular base matrix")
            jmin = min(nz, key=lambda j: abs(a[i][j]))
            if jmin != i:
                for r in range(n):
                    a[r][i], a[r][jmin] = a[r][jmin], a[r][i]
            done = True
            for j in range(i + 1, n):
                if a[i][j] != 0:
                    q = a[i][j] // a[i][i]
                    for r in range(n):
                        a[r][j] -= q * a[r][i]
                    if a[i][j] != 0:
                        done = False
            if done:
                break
        if a[i][i] < 0:
            for r in range(n):
                a[r][i] = -a[r][i]
        for j in range(i):
            q = a[i][j] // a[i][i]
            if q:
                for r in range(n):
                    a[r][j] -= q * a[r][i]
    return tuple(tuple(r) for r in a)


@dataclass(frozen=True)
class LatticeSpec:
    """Full-rank lattice ``A Z^l`` on the grid ``delta Z^l``.

    Parameters
    ----------
    base_matrix : tuple of tuples of int
        Rows of the ``l x l`` integer matrix ``A``.  Columns are generators.
    grid_spacing : float
        Ambient spacing ``delta``.
    """

    base_matrix: tuple[tuple[int, ...], ...]
    grid_spacing: float = 1.0
    _hnf: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        rows = tuple(tuple(int(v) for v in r) for r in self.base_matrix)
        if not rows or any(len(r) != len(rows) for r in rows):
            raise ConfigurationError("base matrix must be square and non-empty")
        for r, r0 in zip(rows, self.base_matrix):
            if any(float(v) != float(w) for v, w in zip(r, r0)):
                raise ConfigurationError("base matrix entries must be integers")
        if not (self.grid_spacing > 0 and np.isfinite(self.grid_spacing)):
            raise ConfigurationError("grid spacing must be a positive finite real")
        if _int_det(rows) == 0:
            raise ConfigurationError("singular base matrix: lattice is not full rank")
        object.__setattr__(self, "base_matrix", rows)
        object.__setattr__(self, "grid_spacing", float(self.grid_spacing))
        object.__setattr__(self, "_hnf", hermite_normal_form(rows))

    @classmethod
    def identity(cls, dim: int, grid_spacing: float = 1.0) -> "LatticeSpec":
        """The ambient grid itself (the case ``L = V``)."""
        return cls(tuple(tuple(int(i == j) for j in range(dim)) for i in range(dim)), grid_spacing)

    @classmethod
    def scaled(cls, dim: int, k: int, grid_spacing: float = 1.0) -> "LatticeSpec":
        """The lattice ``k Z^l``."""
        return cls(tuple(tuple(k * int(i == j) for j in range(dim)) for i in range(dim)), grid_spacing)

    @property
    def ambient_dim(self) -> int:
        return len(self.base_matrix)

    @property
    def hnf(self) -> tuple[tuple[int, ...], ...]:
        return self._hnf

    @property
    def is_identity(self) -> bool:
        return all(self._hnf[i][i] == 1 for i in range(self.ambient_dim))


@dataclass(frozen=True)
class CosetTable:
    """One ambient point per coset of ``L``, in lexicographic order."""

    representatives: tuple[tuple[int, ...], ...]

    def __len__(self) -> int:
        return len(self.representatives)


def quotient_index(spec: LatticeSpec) -> int:
    """Order of the quotient group ``Z^l / A Z^l``, that is ``|det A|``."""
    return abs(_int_det(spec.base_matrix))


def covolume(spec: LatticeSpec) -> float:
    """Volume of a fundamental parallelepiped, ``|det A| * delta**l``.

    Examples
    --------
    >>> covolume(LatticeSpec(((2, 0), (0, 3))))
    6.0
    """
    return quotient_index(spec) * spec.grid_spacing ** spec.ambient_dim


def contains(spec: LatticeSpec, point: Sequence[int]) -> bool:
    """Exact membership test ``A^{-1} point in Z^l``.

    Uses forward substitution on the lower-triangular normal form.
    """
    pt = [int(v) for v in point]
    if len(pt) != spec.ambient_dim:
        raise ConfigurationError(
            f"point has dimension {len(pt)}, lattice has dimension {spec.ambient_dim}"
        )
    h = spec.hnf
    rest = pt[:]
    for i in range(spec.ambient_dim):
        q, r = divmod(rest[i], h[i][i])
        if r:
            return False
        for k in range(i, spec.ambient_dim):
            rest[k] -= q * h[k][i]
    return True


def contains_many(spec: LatticeSpec, points: np.ndarray) -> np.ndarray:
    """Vectorized :func:`contains` for an ``(m, l)`` integer array."""
    pts = np.array(points, dtype=np.int64, copy=True)
    if pts.ndim != 2 or pts.shape[1] != spec.ambient_dim:
        raise ConfigurationError("points must have shape (m, l)")
    h = np.asarray(spec.hnf, dtype=np.int64)
    ok = np.ones(len(pts), dtype=bool)
    for i in range(spec.ambient_dim):
        q, r = np.divmod(pts[:, i], h[i, i])
        ok &= r == 0
        pts[:, i:] -= q[:, None] * h[i:, i][None, :]
    return ok


def coset_representatives(spec: LatticeSpec) -> CosetTable:
    """Integer points of the half-open parallelepiped ``{A x : x in [0,1)^l}``.

    Every coset of ``L`` in ``Z^l`` meets that tile exactly once.  Candidates
    come from the bounding box of the tile; membership in the half-open tile
    is decided exactly with rational arithmetic.

    Examples
    --------
    >>> coset_representatives(LatticeSpec(((2,),))).representatives
    ((0,), (1,))
    """
    a = spec.base_matrix
    n = spec.ambient_dim
    det = _int_det(a)
    # adjugate gives A^{-1} = adj / det exactly
    adj = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [[a[r][c] for c in range(n) if c != i] for r in range(n) if r != j]
            adj[i][j] = (-1) ** (i + j) * (_int_det(minor) if minor else 1)
    lo, hi = [], []
    for i in range(n):
        neg = sum(min(a[i][j], 0) for j in range(n))
        pos = sum(max(a[i][j], 0) for j in range(n))
        lo.append(neg)
        hi.append(pos)
    reps = []
    for pt in itertools.product(*(range(lo[i], hi[i] + 1) for i in range(n))):
        inside = True
        for i in range(n):
            num = sum(adj[i][j] * pt[j] for j in range(n))
            x = Fraction(num, det)
            if not (0 <= x < 1):
                inside = False
                break
        if inside:
            reps.append(tuple(pt))
    reps.sort()
    if len(reps) != abs(det):  # pragma: no cover - guards the enumeration itself
        raise AssertionError("coset enumeration produced the wrong count")
    return CosetTable(tuple(reps))


def parse_lattice(text: str, grid_spacing: float = 1.0) -> LatticeSpec:
    """Parse row-major text such as ``"2,0;0,3"``."""
    try:
        rows = tuple(
            tuple(int(tok.strip()) for tok in row.split(","))
            for row in text.strip().strip('"').split(";")
        )
    except ValueError as exc:
        raise ConfigurationError(f"cannot parse lattice {text!r}: {exc}") from None
    return LatticeSpec(rows, grid_spacing)
