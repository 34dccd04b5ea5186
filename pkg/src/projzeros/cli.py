"""Command line front end: run experiments, compare outputs.

Outputs are a CSV of records plus a JSON manifest carrying the config
hash, seed, timing, and library versions.  CSV bytes depend only on the
config (including the seed), never on wall time, so reruns are
byte-identical; timing lives in the manifest alone.
"""
from __future__ import annotations

import argparse
import csv
import datetime
import hashlib
import json
import os
import sys
import time

import numpy
import scipy

from . import __version__
from .analysis import ExperimentConfig, run_experiment
from .errors import SchemaMismatch
from .testforms import list_families

ENV_OUTDIR = "PROJZEROS_OUT"


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_hash(cfg: ExperimentConfig) -> str:
    return hashlib.sha256(canonical_json(cfg.to_dict()).encode()).hexdigest()


def _fieldnames(records: list) -> list:
    names = []
    for rec in records:
        for key in rec:
            if key not in names:
                names.append(key)
    return names


def write_csv(path: str, records: list) -> None:
    with open(path, "w", newline="") as fh:
        if not records:
            fh.write("")
            return
        writer = csv.DictWriter(fh, fieldnames=_fieldnames(records),
                                restval="", lineterminator="\n")
        writer.writeheader()
        writer.writerows(records)


def _load_config(args) -> ExperimentConfig:
    raw = {}
    if args.config:
        with open(args.config) as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict):
            raise ValueError("config file must hold a JSON object")
    if args.experiment:
        raw["experiment"] = args.experiment
    if "experiment" not in raw:
        raise ValueError("no experiment given; pass a name or --config")
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.threads is not None:
        raw["threads"] = args.threads
    if args.allow_suspect:
        raw["allow_suspect"] = True
    return ExperimentConfig.from_dict(raw)


def cmd_run(args) -> int:
    cfg = _load_config(args)
    digest = config_hash(cfg)
    outdir = args.out or os.environ.get(ENV_OUTDIR) or "."
    os.makedirs(outdir, exist_ok=True)
    started_at = datetime.datetime.now(datetime.timezone.utc).isoformat()
    t0 = time.perf_counter()
    records, extras = run_experiment(cfg)
    duration = time.perf_counter() - t0

    base = os.path.join(outdir, f"{cfg.experiment}_{digest[:12]}")
    summary = [r for r in records if r.get("kind") != "trial"]
    trials = [r for r in records if r.get("kind") == "trial"]
    outputs = [base + ".csv"]
    write_csv(base + ".csv", summary)
    if trials:
        outputs.append(base + ".trials.csv")
        write_csv(base + ".trials.csv", trials)

    manifest = {
        "config_hash": digest,
        "master_seed": cfg.seed,
        "experiment": cfg.experiment,
        "started_at": started_at,
        "duration_s": duration,
        "discarded_trials": extras.get("discarded_trials", 0),
        "flagged_trials": extras.get("flagged_trials", 0),
        "versions": {
            "projzeros": __version__,
            "numpy": numpy.__version__,
            "scipy": scipy.__version__,
            "python": sys.version.split()[0],
        },
        "outputs": outputs,
        "config": cfg.to_dict(),
    }
    with open(base + ".manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")

    for path in outputs:
        print(f"wrote {path}")
    print(f"wrote {base}.manifest.json")
    flagged = extras.get("flagged_trials", 0)
    if flagged and not cfg.allow_suspect:
        print(f"{flagged} trial(s) flagged suspect; rerun with "
              "--allow-suspect to accept them", file=sys.stderr)
        return 3
    return 0


def _read_rows(path: str) -> list:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _pick(rows: list, experiment: str, need: tuple) -> dict:
    chosen = {}
    for row in rows:
        if row.get("experiment") != experiment:
            continue
        if row.get("kind") not in ("summary", "", None):
            continue
        missing = [c for c in need if c not in row or row[c] == ""]
        if missing:
            raise SchemaMismatch(
                f"{experiment} rows lack column(s) {missing}")
        chosen[int(float(row["N"]))] = row
    return chosen


def cmd_compare(args) -> int:
    rows = _read_rows(args.csv_a) + _read_rows(args.csv_b)
    mc = _pick(rows, "variance_mc", ("N", "variance", "stderr_variance"))
    quad = _pick(rows, "variance_quad", ("N", "value", "far_bound"))
    if not mc or not quad:
        raise SchemaMismatch(
            "compare needs one variance_mc and one variance_quad file")
    shared = sorted(set(mc) & set(quad))
    if not shared:
        raise SchemaMismatch("no common degree N between the two files")
    out_rows = []
    for N in shared:
        v_mc = float(mc[N]["variance"])
        se = float(mc[N]["stderr_variance"])
        v_q = float(quad[N]["value"])
        bound = float(quad[N]["far_bound"])
        out_rows.append({
            "N": N,
            "variance_mc": v_mc,
            "stderr_variance": se,
            "variance_quad": v_q,
            "far_bound": bound,
            "ratio": v_mc / v_q,
            "z": (v_mc - v_q) / se if se > 0 else float("nan"),
        })
    if args.out:
        write_csv(args.out, out_rows)
        print(f"wrote {args.out}")
    else:
        writer = csv.DictWriter(sys.stdout, fieldnames=_fieldnames(out_rows),
                                lineterminator="\n")
        writer.writeheader()
        writer.writerows(out_rows)
    return 0


def cmd_list_families(args) -> int:
    fams = list_families()
    if args.json:
        print(json.dumps(fams, indent=2, sort_keys=True))
        return 0
    for fam in fams:
        print(f"{fam['family']}: {fam['notes']}")
        print(f"  dimensions: {fam['m']}")
        print(f"  params: {fam['params']}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="projzeros",
        description="Zero statistics of Gaussian random polynomial systems "
                    "on complex projective space")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment to CSV + manifest")
    p_run.add_argument("experiment", nargs="?", default=None,
                       help="experiment name (or set it in --config)")
    p_run.add_argument("--config", help="JSON config file")
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the master seed")
    p_run.add_argument("--threads", type=int, default=None,
                       help="worker threads (results never depend on this)")
    p_run.add_argument("--out", default=None,
                       help=f"output directory (default ${ENV_OUTDIR} or .)")
    p_run.add_argument("--allow-suspect", action="store_true",
                       help="exit 0 even when refinement flags trials")
    p_run.set_defaults(func=cmd_run)

    p_cmp = sub.add_parser(
        "compare", help="join variance_mc and variance_quad CSVs on N")
    p_cmp.add_argument("csv_a")
    p_cmp.add_argument("csv_b")
    p_cmp.add_argument("--out", default=None, help="output CSV path")
    p_cmp.set_defaults(func=cmd_compare)

    p_fam = sub.add_parser("list-families", help="show test-form families")
    p_fam.add_argument("--json", action="store_true")
    p_fam.set_defaults(func=cmd_list_families)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SchemaMismatch as exc:
        print(f"schema mismatch: {exc}", file=sys.stderr)
        return 2
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
