"""Flat ``key = value`` configuration files.

Lines are ``key = value``; text after ``#`` is a comment and blank lines are
ignored.  Values may be quoted.  Unknown or repeated keys are errors that
carry the offending line number.

Model keys
    ``kind``, ``alpha``, ``phi``, ``coeffs`` (``"2,1"``), ``variogram``,
    ``variogram_slope``, ``hurst``, ``dim``, ``delta``, ``norm``,
    ``norm_weights``, ``q_table`` (``"0:1; 1:0.5"``; vector values as
    ``"0:1|2"``, multi-dimensional points as ``"0,1:2"``), ``shift``,
    ``shift_param``, ``tail_tol``.
Run keys
    ``window``, ``lattice`` (``"2,0;0,1"``), ``construction``, ``b``,
    ``tau``, ``anchor``, ``conditional``, ``n``, ``seed``, ``threads``,
    ``points`` (``"0;1;2"``), ``levels`` (``"0.5,1,2"``), ``representer``,
    ``stopping_epsilon``, ``m_values``, ``scale``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigurationError
from .field import NormSpec
from .lattice import LatticeSpec, parse_lattice
from .models import ModelSpec, ShiftDistribution

__all__ = ["RunConfig", "parse_config_text", "load_config", "model_from_mapping", "MODEL_KEYS", "RUN_KEYS"]

MODEL_KEYS = (
    "kind", "alpha", "phi", "coeffs", "variogram", "variogram_slope", "hurst", "dim", "delta",
    "norm", "norm_weights", "q_table", "shift", "shift_param", "tail_tol",
)
RUN_KEYS = (
    "window", "lattice", "construction", "b", "tau", "anchor", "conditional", "n", "seed", "threads",
    "points", "levels", "representer", "stopping_epsilon", "m_values", "scale",
)


@dataclass
class RunConfig:
    """Resolved settings of one CLI run."""

    command: str
    model_path: str | None = None
    n: int = 100_000
    seed: int | None = None
    window: int | None = None
    lattice: LatticeSpec | None = None
    representations: list[str] = field(default_factory=list)
    output: str | None = None
    format: str = "json"
    threads: int | None = None
    extra: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.seed is None:
            raise ConfigurationError("a seed is mandatory")
        if self.n < 1:
            raise ConfigurationError("n must be >= 1")
        if self.threads is None or self.threads < 1:
            raise ConfigurationError("threads must be >= 1")
        if self.window is not None and self.window < 1:
            raise ConfigurationError("window must be >= 1")
        if self.format not in ("json", "csv"):
            raise ConfigurationError("format must be json or csv")

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "model_path": self.model_path,
            "n": self.n,
            "seed": self.seed,
            "window": self.window,
            "lattice": None if self.lattice is None else [list(r) for r in self.lattice.base_matrix],
            "representations": list(self.representations),
            "output": self.output,
            "format": self.format,
            "threads": self.threads,
            "extra": dict(sorted(self.extra.items())),
        }


def parse_config_text(text: str, source: str = "<config>") -> dict[str, tuple[str, int]]:
    """Parse flat config text into ``{key: (raw value, line number)}``."""
    out: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        if not key:
            raise ConfigurationError(f"{source}:{lineno}: empty key")
        if key not in MODEL_KEYS and key not in RUN_KEYS:
            raise ConfigurationError(f"{source}:{lineno}: unknown key {key!r}")
        if key in out:
            raise ConfigurationError(f"{source}:{lineno}: duplicate key {key!r} (first set on line {out[key][1]})")
        if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
            value = value[1:-1]
        out[key] = (value, lineno)
    return out


def _floats(s: str) -> tuple[float, ...]:
    return tuple(float(v) for v in s.replace(" ", "").split(",") if v)


def _points(s: str) -> tuple[tuple[int, ...], ...]:
    return tuple(tuple(int(v) for v in p.split(",")) for p in s.replace(" ", "").split(";") if p)


def _q_table(s: str) -> tuple:
    rows = []
    for entry in s.replace(" ", "").split(";"):
        if not entry:
            continue
        pt, val = entry.split(":")
        rows.append((tuple(int(v) for v in pt.split(",")), tuple(float(v) for v in val.split("|"))))
    return tuple(rows)


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


_MODEL_CONVERT = {
    "alpha": float, "phi": float, "coeffs": _floats, "variogram": str, "variogram_slope": float,
    "hurst": float, "dim": int, "delta": float, "q_table": _q_table, "tail_tol": float,
}
_RUN_CONVERT = {
    "window": int, "lattice": parse_lattice, "construction": str, "b": float, "tau": float,
    "anchor": str, "conditional": _bool, "n": int, "seed": int, "threads": int, "points": _points,
    "levels": _floats, "representer": str, "stopping_epsilon": float, "m_values": _floats, "scale": int,
}


def _convert(table, key, value, line, source):
    try:
        return table[key](value)
    except (ValueError, TypeError, ConfigurationError) as exc:
        raise ConfigurationError(f"{source}:{line}: bad value for {key!r}: {exc}") from None


def model_from_mapping(entries: dict[str, tuple[str, int]], source: str = "<config>") -> ModelSpec:
    """Build a :class:`ModelSpec` from parsed entries (run keys are ignored)."""
    if "kind" not in entries:
        raise ConfigurationError(f"{source}: missing required key 'kind'")
    kw: dict = {"kind": entries["kind"][0]}
    for key, (value, line) in entries.items():
        if key in _MODEL_CONVERT:
            kw[key] = _convert(_MODEL_CONVERT, key, value, line, source)
    try:
        if "norm" in entries or "norm_weights" in entries:
            weights = _floats(entries["norm_weights"][0]) if "norm_weights" in entries else ()
            kw["norm"] = NormSpec(entries.get("norm", ("euclidean", 0))[0], weights)
        if "shift" in entries or "shift_param" in entries:
            sk = entries.get("shift", ("uniform_window", 0))[0]
            sp = float(entries["shift_param"][0]) if "shift_param" in entries else 0.8
            kw["shift"] = ShiftDistribution(sk, sp)
        return ModelSpec(**kw)
    except (ConfigurationError, ValueError) as exc:
        line = min((ln for k, (_, ln) in entries.items() if k in MODEL_KEYS), default=0)
        bad = [ln for k, (_, ln) in entries.items() if k in MODEL_KEYS and k in str(exc)]
        raise ConfigurationError(f"{source}:{bad[0] if bad else line}: {exc}") from None


def run_options(entries: dict[str, tuple[str, int]], source: str = "<config>") -> dict:
    """Converted run keys present in ``entries``."""
    return {k: _convert(_RUN_CONVERT, k, v, ln, source) for k, (v, ln) in entries.items() if k in _RUN_CONVERT}


def load_config(path: str | Path, command: str = "estimate") -> tuple[RunConfig, ModelSpec]:
    """Read a config file; returns the run settings it defines and the model."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from None
    entries = parse_config_text(text, str(path))
    model = model_from_mapping(entries, str(path))
    opts = run_options(entries, str(path))
    cfg = RunConfig(command=command, model_path=str(path))
    for key in ("n", "seed", "window", "lattice", "threads"):
        if key in opts:
            setattr(cfg, key, opts.pop(key))
    cfg.extra = opts
    return cfg, model
