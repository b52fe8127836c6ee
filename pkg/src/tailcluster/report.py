"""Run reports: JSON with 17 significant digits, CSV tables, schema check.

Floats are written with ``%.17g`` so that ``json.loads`` recovers the exact
binary value.  Non-finite floats use the ``NaN``/``Infinity`` tokens that
Python's :mod:`json` reads back.  Everything that depends on the machine or
on the thread count (timings, thread count) lives under ``wall_time`` so
that the rest of a report is byte-identical for a given config and seed.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

__all__ = ["SCHEMA_VERSION", "RunReport", "dumps", "build_id", "load_schema", "validate_report", "estimates_csv", "table_csv"]

SCHEMA_VERSION = "1.0"
_TIMING_KEYS = ("elapsed_s",)


def _encode(obj, out: list[str]) -> None:
    if obj is None or obj is True or obj is False:
        out.append({None: "null", True: "true", False: "false"}[obj])
    elif isinstance(obj, (bool, np.bool_)):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            out.append("NaN")
        elif math.isinf(v):
            out.append("Infinity" if v > 0 else "-Infinity")
        else:
            txt = "%.17g" % v
            out.append(txt if any(c in txt for c in ".e") else txt + ".0")
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, dict):
        out.append("{")
        for i, (k, v) in enumerate(obj.items()):
            if i:
                out.append(", ")
            out.append(json.dumps(str(k), ensure_ascii=False))
            out.append(": ")
            _encode(v, out)
        out.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        out.append("[")
        for i, v in enumerate(obj.tolist() if isinstance(obj, np.ndarray) else obj):
            if i:
                out.append(", ")
            _encode(v, out)
        out.append("]")
    elif hasattr(obj, "to_dict"):
        _encode(obj.to_dict(), out)
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj) -> str:
    """JSON text with every float printed to 17 significant digits."""
    out: list[str] = []
    _encode(obj, out)
    return "".join(out)


def build_id() -> str:
    """SHA-1 over the package sources (sorted by name), first 12 hex digits."""
    h = hashlib.sha1()
    root = Path(__file__).resolve().parent
    for p in sorted(list(root.glob("*.py")) + list(root.glob("*.pyx"))):
        h.update(p.name.encode())
        h.update(p.read_bytes())
    return h.hexdigest()[:12]


def load_schema() -> dict:
    text = resources.files("tailcluster").joinpath("schemas/run_report.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def validate_report(doc: dict) -> None:
    """Raise ``jsonschema.ValidationError`` if ``doc`` violates the schema."""
    import jsonschema

    jsonschema.validate(doc, load_schema())


@dataclass
class RunReport:
    command: dict
    config: dict
    estimates: list = field(default_factory=list)
    results: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    wall_time: dict = field(default_factory=dict)
    schema_version: str = SCHEMA_VERSION
    build: str = field(default_factory=build_id)

    def to_dict(self) -> dict:
        ests, times = [], []
        for e in self.estimates:
            d = e.to_dict() if hasattr(e, "to_dict") else dict(e)
            diag = dict(d.get("diagnostics", {}))
            times.append({k: diag.pop(k) for k in _TIMING_KEYS if k in diag})
            d["diagnostics"] = diag
            ests.append(d)
        wall = dict(self.wall_time)
        if any(times):
            wall["per_estimate"] = times
        return {
            "schema_version": self.schema_version,
            "command": self.command,
            "config": self.config,
            "build_id": self.build,
            "estimates": ests,
            "results": self.results,
            "diagnostics": self.diagnostics,
            "wall_time": wall,
        }

    def to_json(self) -> str:
        return dumps(self.to_dict()) + "\n"


def _meta_lines(report: RunReport) -> list[str]:
    d = report.to_dict()
    lines = [
        f"# schema_version: {d['schema_version']}",
        f"# build_id: {d['build_id']}",
        f"# command: {dumps(d['command'])}",
        f"# config: {dumps(d['config'])}",
    ]
    if d["diagnostics"]:
        lines.append(f"# diagnostics: {dumps(d['diagnostics'])}")
    return lines


def estimates_csv(report: RunReport) -> str:
    """One row per representation: ``representation,value,stderr,n_eff``."""
    buf = io.StringIO()
    buf.write("\n".join(_meta_lines(report)) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["representation", "value", "stderr", "n_eff"])
    for e in report.to_dict()["estimates"]:
        w.writerow([e["params"].get("name", e["representation_id"]), "%.17g" % e["value"], "%.17g" % e["stderr"], "%.17g" % e["n_effective"]])
    return buf.getvalue()


def table_csv(report: RunReport, header: list[str], rows: list[list]) -> str:
    """Arbitrary table with the metadata header block."""
    buf = io.StringIO()
    buf.write("\n".join(_meta_lines(report)) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow(["%.17g" % v if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()
