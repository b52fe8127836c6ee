"""Command line interface.

``tailcluster <subcommand> --model FILE --seed S [options]``.  Exit status
is 0 on success, 2 for configuration or usage errors and 3 for numerical
failures.  Reports go to ``--out`` (stdout when omitted) as JSON or CSV.
"""
from __future__ import annotations

import argparse
import dataclasses
import sys
import time

import numpy as np

from . import __version__
from .cluster import METHODS, ClusterConstructionSpec, construct_Q_batch
from .config import RunConfig, load_config
from .errors import ConfigurationError, NumericalFailure
from .extremal import consistency_report, estimate_m_approx, run_representation, standard_representations
from .field import Window
from .lattice import parse_lattice
from .models import ModelSpec, decay_radius, sample_Theta_batch, sample_Y_batch, sample_Z_batch
from .report import RunReport, estimates_csv, table_csv
from .rng import RandomStream, default_threads, purpose_key

__all__ = ["main", "dispatch", "build_parser", "default_window"]

SUBCOMMANDS = ("simulate", "estimate", "compare", "maxstable-check", "identity-check", "m-approx")


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit with status 2
        self.print_usage(sys.stderr)
        raise ConfigurationError(f"{self.prog}: {message}")


def default_window(model: ModelSpec) -> int:
    """Half-width used when ``--window`` is not given."""
    if model.kind == "brown_resnick":
        return 32
    return max(2 * decay_radius(model) + 2, 8)


def _positive_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tailcluster", description="Cluster fields, extremal index estimators and max-stable simulation.")
    p.add_argument("--version", action="version", version=f"tailcluster {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, model_required=True):
        sp.add_argument("--model", required=model_required, help="model config file (key = value lines)")
        sp.add_argument("--seed", type=int, required=True, help="master seed (mandatory)")
        sp.add_argument("--n", type=_positive_int, default=None, help="sample size")
        sp.add_argument("--window", type=_positive_int, default=None, help="window half-width in grid units")
        sp.add_argument("--lattice", default=None, help='lattice base, e.g. "2,0;0,1" (default: ambient grid)')
        sp.add_argument("--threads", type=_positive_int, default=None, help="worker threads (default: $TAILCLUSTER_THREADS or 1)")
        sp.add_argument("--out", default=None, help="output path (default: stdout)")
        sp.add_argument("--format", choices=("json", "csv"), default="json")

    sp = sub.add_parser("simulate", help="draw fields and write them as rows")
    common(sp)
    sp.add_argument("--field", choices=("Z", "Theta", "Y", "Q"), default="Z")
    sp.add_argument("--construction", choices=METHODS, default=None, help="cluster construction for --field Q")

    for name in ("estimate", "compare"):
        sp = sub.add_parser(name, help="extremal index estimates" if name == "estimate" else "consistency of several estimates")
        common(sp)
        sp.add_argument("--rep", action="append", default=None,
                        help="representation name (e.g. berman:tau=1), 'all', or a ';'-separated list; may be repeated")
        sp.add_argument("--window-check", action="store_true", help="also run the 2a window drift diagnostic")

    sp = sub.add_parser("maxstable-check", help="compare simulated max-stable fidis with the exponent measure")
    common(sp)
    sp.add_argument("--points", default=None, help='evaluation points, e.g. "0;1;2"')
    sp.add_argument("--levels", default=None, help='levels, e.g. "0.5,1,2"')
    sp.add_argument("--representer", choices=("raw", "spectral"), default=None)
    sp.add_argument("--epsilon", type=float, default=None, help="stopping tolerance (default 0.01)")

    sp = sub.add_parser("identity-check", help="run the identity battery")
    common(sp, model_required=False)
    sp.add_argument("--battery", choices=("default",), default="default")

    sp = sub.add_parser("m-approx", help="truncation error of the m-truncated cluster")
    common(sp)
    sp.add_argument("--m-values", default=None, help='comma list, default "1,2,4,8"')
    sp.add_argument("--scale", type=_positive_int, default=None, help="box scale n of n*[0,1]^l (default 256)")
    return p


def _floats(s: str) -> list[float]:
    try:
        return [float(v) for v in s.split(",") if v.strip()]
    except ValueError:
        raise ConfigurationError(f"not a comma list of numbers: {s!r}") from None


def _points(s: str) -> tuple:
    try:
        return tuple(tuple(int(v) for v in p.split(",")) for p in s.replace(" ", "").split(";") if p)
    except ValueError:
        raise ConfigurationError(f"not a point list: {s!r}") from None


def _resolve(args) -> tuple[RunConfig, ModelSpec | None]:
    if args.model:
        cfg, model = load_config(args.model, args.command)
    else:
        cfg, model = RunConfig(command=args.command), None
    cfg.seed = args.seed
    if args.n is not None:
        cfg.n = args.n
    if args.window is not None:
        cfg.window = args.window
    if args.lattice is not None:
        cfg.lattice = parse_lattice(args.lattice)
    if args.threads is not None:
        cfg.threads = args.threads
    elif cfg.threads is None:
        cfg.threads = default_threads()
    cfg.output = args.out
    cfg.format = args.format
    if model is not None and cfg.window is None:
        cfg.window = default_window(model)
    cfg.validate()
    return cfg, model


def _config_doc(cfg: RunConfig, model: ModelSpec | None) -> dict:
    run = cfg.to_dict()
    run.pop("threads")  # thread count must not change the report body
    run.pop("output")
    return {"run": run, "model": None if model is None else dataclasses.asdict(model)}


def _argv_echo(argv: list[str]) -> list[str]:
    out, skip = [], False
    for a in argv:
        if skip:
            skip = False
            continue
        if a in ("--threads", "--out"):
            skip = True
            continue
        if a.startswith(("--threads=", "--out=")):
            continue
        out.append(a)
    return out


def _config_construction(cfg: RunConfig) -> str | None:
    """``cluster_sup`` representation named by the config's construction keys."""
    e = cfg.extra
    if "construction" not in e:
        return None
    parts = [str(e["construction"])]
    for key in ("b", "tau", "anchor", "conditional"):
        if key in e:
            parts.append(f"{key}={e[key]}")
    return "cluster_sup:" + ",".join(parts)


def _reps(args, model: ModelSpec, cfg: RunConfig) -> list[str]:
    raw = args.rep or [_config_construction(cfg) or "all"]
    names: list[str] = []
    for item in raw:
        for name in (s.strip() for s in item.split(";")):
            if name == "all":
                names += standard_representations(model)
            elif name:
                names.append(name)
    return names


def _cmd_estimate(args, cfg, model, report: RunReport):
    names = _reps(args, model, cfg)
    if args.command == "compare" and len(names) < 2:
        raise ConfigurationError("compare needs at least two representations")
    if not names:
        raise ConfigurationError("no representation selected")
    cfg.representations = names
    window = Window.cube(cfg.window, model.dim_l, model.grid_spacing)
    reps = [run_representation(nm, model, cfg.lattice, window, cfg.n, cfg.seed, cfg.threads, window_check=args.window_check) for nm in names]
    report.estimates = reps
    if len(reps) >= 2:
        report.results["consistency"] = consistency_report(reps).to_dict()
    acc = {r.params["name"]: r.diagnostics["acceptance_rate"] for r in reps if "acceptance_rate" in r.diagnostics}
    if acc:
        report.diagnostics["acceptance_rates"] = acc
    drift = {r.params["name"]: r.diagnostics["window_drift"] for r in reps if "window_drift" in r.diagnostics}
    if drift:
        report.diagnostics["window_drift"] = drift
    return (lambda: estimates_csv(report)) if cfg.format == "csv" else None


def _cmd_simulate(args, cfg, model, report: RunReport):
    window = Window.cube(cfg.window, model.dim_l, model.grid_spacing)
    e = cfg.extra
    method = args.construction or e.get("construction", "norm_theta")
    rng = RandomStream(cfg.seed, 0, purpose_key("simulate", args.field, method)).generator()
    if args.field == "Z":
        b = sample_Z_batch(model, window, cfg.n, rng)
    elif args.field == "Theta":
        b = sample_Theta_batch(model, window, cfg.n, rng)
    elif args.field == "Y":
        b = sample_Y_batch(model, window, cfg.n, rng)
    else:
        cons = ClusterConstructionSpec(
            method, lattice=cfg.lattice, b=e.get("b", 1.0), tau=e.get("tau", 0.0),
            anchor=e.get("anchor", "first_exceedance"), conditional=e.get("conditional", False),
        )
        b = construct_Q_batch(cons, model, window, cfg.n, rng)
    cfg.extra["field"] = args.field
    l, d = model.dim_l, model.dim_d
    header = ["sample", "weight"] + [f"t{i + 1}" for i in range(l)] + [f"v{j + 1}" for j in range(d)]
    rows, samples = [], []
    for i in range(cfg.n):
        wd = b.draw(i)
        body = list(wd.sample.csv_rows())
        rows += [[i, float(wd.weight)] + r for r in body]
        samples.append({"weight": float(wd.weight), "attempts": int(wd.attempts), "rows": body})
    report.results["columns"] = header[2:]
    report.results["samples"] = samples
    return (lambda: table_csv(report, header, rows)) if cfg.format == "csv" else None


def _cmd_maxstable(args, cfg, model, report: RunReport):
    from .maxstable import MaxStableSampleSpec, dehaan_sample, empirical_neglog_cdf, fidi_neglog, frechet_ks, rosinski_sample
    from scipy import stats as sps

    pts = _points(args.points) if args.points else cfg.extra.get("points", ((0,), (1,), (2,)))
    levels = _floats(args.levels) if args.levels else list(cfg.extra.get("levels", (0.5, 1.0, 2.0)))
    representer = args.representer or cfg.extra.get("representer") or ("spectral" if model.kind == "brown_resnick" else "raw")
    eps = args.epsilon if args.epsilon is not None else float(cfg.extra.get("stopping_epsilon", 0.01))
    k = len(pts)
    lv = np.array([[v] * k for v in levels])
    n = cfg.n
    cfg.extra.update(points=[list(p) for p in pts], levels=levels, representer=representer, epsilon=eps)
    fidi, fidi_se = fidi_neglog(model, pts, lv, max(n, 10_000), cfg.seed, representer=representer)
    rows, samples = [], {}
    for rep_name in ("dehaan", "rosinski"):
        spec = MaxStableSampleSpec(model, pts, rep_name, eps, representer=representer)
        fn = dehaan_sample if rep_name == "dehaan" else rosinski_sample
        x, diag = fn(spec, n, cfg.seed, cfg.threads, return_diagnostics=True)
        samples[rep_name] = x
        emp, se = empirical_neglog_cdf(x, lv)
        for i, v in enumerate(levels):
            comb = float(np.hypot(se[i], fidi_se[i]))
            z = float((emp[i] - fidi[i]) / comb) if comb > 0 else 0.0
            rows.append([rep_name, v, float(emp[i]), float(se[i]), float(fidi[i]), float(fidi_se[i]), z])
        report.diagnostics[rep_name] = diag
        report.results.setdefault("frechet_ks", {})[rep_name] = [frechet_ks(x[:, j], model.alpha) for j in range(k)]
    report.results["dehaan_vs_rosinski_ks"] = [
        float(sps.ks_2samp(samples["dehaan"][:, j], samples["rosinski"][:, j]).statistic) for j in range(k)
    ]
    header = ["representation", "level", "neglog_cdf", "stderr", "fidi", "fidi_stderr", "z"]
    report.results["table"] = {"columns": header, "rows": rows}
    return (lambda: table_csv(report, header, rows)) if cfg.format == "csv" else None


def _cmd_identity(args, cfg, model, report: RunReport):
    from .identities import battery_summary, default_battery, run_battery

    cases = default_battery(n=cfg.n, seed=cfg.seed)
    res = run_battery(cases, cfg.threads)
    cfg.extra["battery"] = args.battery
    table = [r.to_dict() for r in res]
    for t in table:
        t["verdict"] = "PASS" if abs(t["z"]) < 4 else ("FLAG" if abs(t["z"]) < 5 else "FAIL")
    report.results["cases"] = table
    report.results["summary"] = battery_summary(res)
    header = list(table[0].keys()) if table else []
    return (lambda: table_csv(report, header, [list(t.values()) for t in table])) if cfg.format == "csv" else None


def _cmd_m_approx(args, cfg, model, report: RunReport):
    ms = _floats(args.m_values) if args.m_values else list(cfg.extra.get("m_values", (1.0, 2.0, 4.0, 8.0)))
    scale = args.scale or int(cfg.extra.get("scale", 256))
    window = Window.cube(cfg.window, model.dim_l, model.grid_spacing)
    cfg.extra.update(m_values=ms, scale=scale)
    reps = [estimate_m_approx(model, m, cfg.n, cfg.seed, scale=scale, window=window, threads=cfg.threads) for m in ms]
    for m, r in zip(ms, reps):
        r.params["name"] = f"m_approx:m={m:g}"
    report.estimates = reps
    pairs = []
    for (m0, a), (m1, b) in zip(zip(ms, reps), zip(ms[1:], reps[1:])):
        se = float(np.hypot(a.stderr, b.stderr))
        pairs.append({"m": [m0, m1], "increase": b.value - a.value, "nonincreasing": b.value - a.value <= 3 * se})
    report.results["monotone_pairs"] = pairs
    return (lambda: estimates_csv(report)) if cfg.format == "csv" else None


_HANDLERS = {
    "simulate": _cmd_simulate,
    "estimate": _cmd_estimate,
    "compare": _cmd_estimate,
    "maxstable-check": _cmd_maxstable,
    "identity-check": _cmd_identity,
    "m-approx": _cmd_m_approx,
}


def dispatch(argv: list[str] | None = None) -> int:
    """Run one command; returns the exit status."""
    argv = list(sys.argv[1:] if argv is None else argv)
    t0 = time.perf_counter()
    try:
        args = build_parser().parse_args(argv)
        cfg, model = _resolve(args)
        report = RunReport(command={"subcommand": args.command, "argv": _argv_echo(argv)}, config={})
        render = _HANDLERS[args.command](args, cfg, model, report)
        report.config = _config_doc(cfg, model)
        report.wall_time = {"total_s": time.perf_counter() - t0, "threads": cfg.threads}
        text = report.to_json() if render is None else render()
        if cfg.output:
            with open(cfg.output, "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return 0
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
