"""Command-line entry points.

    ssrf simulate SPEC.json                     Monte Carlo table
    ssrf forecast DATA.csv SERIES.json RUN.json expanding-window evaluation
    ssrf tune DATA.csv SERIES.json RUN.json     keep-fraction grid search
    ssrf eigen-report DATA.csv SERIES.json RUN.json

Every command takes ``--seed``, ``--threads`` and ``--out``. Failures print a
single ``ERROR <code>: <detail>`` line on stderr and exit with status 1.
"""
import argparse
import csv
import hashlib
import json
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigInvalid, InsufficientData, ParseError, SSRFError
from .factors import eigenvalue_shares, write_shares_csv
from .pipeline import (
    PipelineConfig,
    _map,
    expanding_window_eval,
    factor_space,
    tune_keep_fraction,
)
from .screening import KEEP_FRACTION_GRID
from .simulation import DgpConfig, run_experiment, write_table_csv
from .transform import load_dataset

DEFAULT_SEED = 42
EIGEN_METHODS = ("PCA", "sPCA", "srPCA", "SSPCA-f", "SSPCA-d")
_EIGEN_VARIANT = {"PCA": "PCA", "sPCA": "SPCA", "srPCA": "SRPCA", "SSPCA-f": "SSRF1",
                  "SSPCA-d": "SSRF2"}
RUN_KEYS = ("target", "split_date", "exclude_target", "tune_grid", "eigen_shares", "top_n",
            "n_loadings", "eigen_keep_fraction")


def read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_hash(resolved):
    return hashlib.sha256(canonical_json(resolved).encode("utf-8")).hexdigest()


def _timestamp():
    # SOURCE_DATE_EPOCH pins timestamps for reproducible manifests
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = int(epoch) if epoch is not None and epoch.strip() else time.time()
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(t))


def _fmt(x):
    return repr(float(x))


class Run:
    """Collects output paths and writes the run manifest."""

    def __init__(self, command, out_dir, seed, resolved):
        self.command = command
        self.out = Path(out_dir)
        self.seed = seed
        self.resolved = resolved
        self.started = _timestamp()
        self.paths = []
        self.out.mkdir(parents=True, exist_ok=True)

    def path(self, name):
        p = self.out / name
        self.paths.append(p.name)
        return p

    def finish(self):
        manifest = {
            "command": self.command,
            "config_hash": config_hash(self.resolved),
            "seed": self.seed,
            "started": self.started,
            "finished": _timestamp(),
            "output_paths": self.paths + ["manifest.json"],
            "tool_version": __version__,
            "config": self.resolved,
        }
        with open(self.out / "manifest.json", "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        for name in manifest["output_paths"]:
            if not (self.out / name).is_file():
                raise SSRFError(f"declared output {name} was not written")


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def _sim_spec(spec, seed):
    if not isinstance(spec, dict):
        raise ConfigInvalid("experiment spec must be a JSON object")
    allowed = {"dgp", "pipeline", "n_reps", "keep_fractions", "strength_configs", "metrics",
               "origins", "recovery_rule"}
    unknown = set(spec) - allowed
    if unknown:
        raise ConfigInvalid(f"unknown experiment field(s): {sorted(unknown)}")
    dgp_d = dict(spec.get("dgp", {"dgp": 1}))
    if seed is not None:
        dgp_d["seed"] = seed
    dgp_d.setdefault("seed", DEFAULT_SEED)
    dgp = DgpConfig.from_dict(dgp_d)
    pipe = PipelineConfig.from_dict(spec.get("pipeline", {}))
    n_reps = int(spec.get("n_reps", 100))
    kfs = [float(v) for v in spec.get("keep_fractions", KEEP_FRACTION_GRID)]
    strengths = [tuple(float(a) for a in s) for s in spec.get("strength_configs", [dgp.alphas])]
    metrics = list(spec.get("metrics", ["recovery", "msfe"]))
    if not kfs or not strengths:
        raise ConfigInvalid("keep_fractions and strength_configs must be non-empty")
    if set(metrics) - {"recovery", "msfe"} or not metrics:
        raise ConfigInvalid("metrics must be a non-empty subset of ['recovery', 'msfe']")
    origins = spec.get("origins")
    if origins is not None:
        if len(origins) != 2:
            raise ConfigInvalid("origins must be [first, last]")
        origins = [int(o) for o in origins]
    for a in strengths:
        DgpConfig.from_dict({**dgp.to_dict(), "alphas": list(a)})
    resolved = {
        "dgp": dgp.to_dict(),
        "pipeline": pipe.to_dict(),
        "n_reps": n_reps,
        "keep_fractions": kfs,
        "strength_configs": [list(a) for a in strengths],
        "metrics": metrics,
        "origins": origins,
        "recovery_rule": spec.get("recovery_rule", "1se"),
    }
    return dgp, pipe, resolved


def cmd_simulate(args):
    spec = read_json(args.spec)
    dgp, pipe, resolved = _sim_spec(spec, args.seed)
    run = Run("simulate", args.out, dgp.seed, resolved)
    rows = run_experiment(dgp, pipe, resolved["n_reps"], resolved["keep_fractions"],
                          resolved["strength_configs"], tuple(resolved["metrics"]),
                          tuple(resolved["origins"]) if resolved["origins"] else None,
                          args.threads, resolved["recovery_rule"])
    write_table_csv(run.path("simulation.csv"), rows)
    with open(run.path("replications.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["strength_config", "keep_fraction", "rep", "support_recovered", "norm",
                    "support", "msfe"])
        for row in rows:
            for d in row["details"]:
                w.writerow([
                    row["strength_config"], f"{row['keep_fraction']:g}", d["rep"],
                    int(d["support_recovered"]) if "support_recovered" in d else "",
                    _fmt(d["norm"]) if "norm" in d else "",
                    " ".join(str(i) for i in d.get("support", [])),
                    _fmt(d["msfe"]) if "msfe" in d else "",
                ])
    run.finish()
    return 0


# ---------------------------------------------------------------------------
# data-driven commands
# ---------------------------------------------------------------------------

def _run_config(path):
    cfg = read_json(path)
    if not isinstance(cfg, dict):
        raise ConfigInvalid("run config must be a JSON object")
    if "target" not in cfg:
        raise ConfigInvalid("run config must name the target series")
    run_part = {k: cfg[k] for k in RUN_KEYS if k in cfg}
    pipe = PipelineConfig.from_dict({k: v for k, v in cfg.items() if k not in RUN_KEYS})
    run_part.setdefault("exclude_target", True)
    run_part.setdefault("split_date", None)
    return pipe, run_part


def _load(args):
    pipe, run_part = _run_config(args.config)
    ds = load_dataset(args.data, args.series)
    ti = ds.index_of(run_part["target"])
    y = ds.raw[ti]
    rows = [i for i in range(len(ds.specs)) if not (run_part["exclude_target"] and i == ti)]
    if not rows:
        raise InsufficientData("no predictors left after excluding the target")
    X = ds.raw[rows]
    names = [ds.specs[i].name for i in rows]
    groups = [ds.specs[i].group for i in rows]
    return ds, pipe, run_part, X, y, names, groups


def _split_index(ds, split_date, h):
    """Number of observations in the training window ending at ``split_date``."""
    if split_date is None:
        raise ConfigInvalid("run config needs a split_date (YYYY-MM)")
    T = len(ds.dates)
    if split_date not in ds.dates:
        if split_date > ds.dates[-1]:
            raise InsufficientData(f"split date {split_date} is after the last observation")
        raise InsufficientData(f"split date {split_date} is not a sample month")
    n = ds.dates.index(split_date) + 1
    if n > T - h:
        raise InsufficientData(f"split date {split_date} leaves no forecast origin for h={h}")
    return n


def _resolved(args, pipe, run_part):
    return {"data": Path(args.data).name, "series": Path(args.series).name,
            "pipeline": pipe.to_dict(), **{k: run_part[k] for k in sorted(run_part)}}


def cmd_forecast(args):
    ds, pipe, run_part, X, y, _, _ = _load(args)
    first = _split_index(ds, run_part["split_date"], pipe.h)
    last = len(ds.dates) - pipe.h
    seed = DEFAULT_SEED if args.seed is None else args.seed
    run = Run("forecast", args.out, seed, _resolved(args, pipe, run_part))
    value, records = expanding_window_eval(X, y, pipe, first, last, args.threads)
    with open(run.path("forecasts.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["origin_date", "target_date", "origin_time", "horizon", "prediction",
                    "actual", "active_factors", "n_factors", "penalty"])
        for rec in records:
            w.writerow([ds.dates[rec.origin_time - 1], ds.dates[rec.origin_time - 1 + rec.horizon],
                        rec.origin_time, rec.horizon, _fmt(rec.prediction), _fmt(rec.actual),
                        rec.active_factors, rec.n_factors, _fmt(rec.penalty)])
    summary = {
        "target": run_part["target"],
        "msfe": value,
        "n_forecasts": len(records),
        "first_origin": ds.dates[first - 1],
        "last_origin": ds.dates[last - 1],
        "config_snapshot": records[-1].config_snapshot.to_dict(),
        "penalty_selection": "expanding-window one-step-ahead validation",
    }
    with open(run.path("summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if run_part.get("eigen_shares"):
        top_n = int(run_part.get("top_n", 15))

        def shares(t):
            fs = factor_space(X[:, :t], y[:t], pipe)
            return eigenvalue_shares(fs.parts[0].scaled, top_n) if fs.parts else None

        table = _map(shares, list(range(first, last + 1)), args.threads)
        with open(run.path("eigen_shares_by_origin.csv"), "w", newline="",
                  encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["origin_date"] + [f"share_{i + 1}" for i in range(top_n)])
            for t, sh in zip(range(first, last + 1), table):
                if sh is not None:
                    w.writerow([ds.dates[t - 1]] + [f"{v:.6f}" for v in sh])
    run.finish()
    return 0


def cmd_tune(args):
    ds, pipe, run_part, X, y, _, _ = _load(args)
    n = _split_index(ds, run_part["split_date"], pipe.h)
    grid = run_part.get("tune_grid", list(KEEP_FRACTION_GRID))
    if not isinstance(grid, list) or not grid:
        raise ConfigInvalid("tune_grid must be a non-empty list of fractions")
    seed = DEFAULT_SEED if args.seed is None else args.seed
    run = Run("tune", args.out, seed, _resolved(args, pipe, run_part))
    best, table = tune_keep_fraction(X[:, :n], y[:n], pipe, grid, threads=args.threads)
    with open(run.path("cv_table.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["keep_fraction", "cv_msfe"])
        for g, v in zip(grid, table):
            w.writerow([f"{float(g):g}", _fmt(v)])
    with open(run.path("tune.json"), "w", encoding="utf-8") as fh:
        json.dump({"selected_keep_fraction": best, "train_end": ds.dates[n - 1]}, fh,
                  indent=2, sort_keys=True)
        fh.write("\n")
    run.finish()
    return 0


def cmd_eigen_report(args):
    ds, pipe, run_part, X, y, names, groups = _load(args)
    if run_part.get("split_date") is None:
        n = len(ds.dates)
    else:
        n = _split_index(ds, run_part["split_date"], pipe.h)
    top_n = int(run_part.get("top_n", 15))
    n_load = int(run_part.get("n_loadings", 3))
    kf = float(run_part.get("eigen_keep_fraction", 0.25))
    if top_n < 1 or n_load < 1:
        raise ConfigInvalid("top_n and n_loadings must be >= 1")
    seed = DEFAULT_SEED if args.seed is None else args.seed
    run = Run("eigen-report", args.out, seed, _resolved(args, pipe, run_part))

    def one(method):
        cfg = replace(pipe, variant=_EIGEN_VARIANT[method], keep_fraction=kf, r=n_load)
        fs = factor_space(X[:, :n], y[:n], cfg)
        part = fs.parts[0]
        return eigenvalue_shares(part.scaled, top_n), part, np.flatnonzero(fs.keep_rows)

    results = dict(zip(EIGEN_METHODS, _map(one, list(EIGEN_METHODS), args.threads)))
    write_shares_csv(run.path("eigen_shares.csv"), {m: results[m][0] for m in EIGEN_METHODS})
    with open(run.path("loadings.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["variable", "group", "method"] + [f"factor_{j + 1}" for j in range(n_load)])
        for m in EIGEN_METHODS:
            _, part, kept = results[m]
            L = part.model.loadings
            for row, src in enumerate(part.selected):
                vals = [f"{L[row, j]:.6f}" if j < L.shape[1] else "" for j in range(n_load)]
                w.writerow([names[kept[src]], groups[kept[src]], m] + vals)
    run.finish()
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help=f"random seed (default {DEFAULT_SEED})")
    common.add_argument("--threads", type=int, default=1, help="worker threads (default 1)")
    common.add_argument("--out", default="out", help="output directory (default ./out)")
    parser = argparse.ArgumentParser(prog="ssrf", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"ssrf {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo experiment")
    p.add_argument("spec", help="experiment spec (JSON)")
    p.set_defaults(func=cmd_simulate)
    for name, func, helptext in (
        ("forecast", cmd_forecast, "expanding-window out-of-sample evaluation"),
        ("tune", cmd_tune, "keep-fraction grid search on the training window"),
        ("eigen-report", cmd_eigen_report, "eigenvalue shares and loadings per method"),
    ):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("data", help="monthly panel (CSV, first column 'date')")
        p.add_argument("series", help="series spec (JSON)")
        p.add_argument("config", help="run config (JSON)")
        p.set_defaults(func=func)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    try:
        return args.func(args)
    except SSRFError as exc:
        print(f"ERROR {exc.code}: {exc}", file=sys.stderr)
    except OSError as exc:
        print(f"ERROR IOError: {exc}", file=sys.stderr)
    except (TypeError, ValueError) as exc:
        print(f"ERROR ConfigInvalid: {exc}", file=sys.stderr)
    return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
