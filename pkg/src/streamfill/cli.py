"""Command line entry point: ``streamfill synth|evaluate|impute|report``.

On failure a single JSON line ``{"error": <class>, "message": <text>}`` goes to
stderr and the exit status is nonzero.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path

from .core import align, split_chronological
from .errors import InvalidConfig, StreamfillError
from .harness import fit_method, impute_with, run_experiment
from .io import read_series_csv, write_series_csv
from .plan import ExperimentPlan, METHODS, load_plan
from .report import emit_report, read_results_csv
from .synthdata import SynthConfig, generate

log = logging.getLogger("streamfill")


def _plan(path, seed=None) -> ExperimentPlan:
    plan = load_plan(path) if path else ExperimentPlan()
    return plan.with_seed(seed) if seed is not None else plan


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def cmd_synth(args) -> int:
    plan = _plan(args.config)
    cfg = plan.synth or SynthConfig()
    if args.seed is not None:
        cfg = SynthConfig.from_dict({**cfg.to_dict(), "seed": args.seed})
    ds, bias = generate(cfg)
    out = Path(args.out)
    write_series_csv(ds.observed, out / "insitu.csv")
    write_series_csv(ds.forecast, out / "forecast.csv")
    (out / "ground_bias.json").write_text(
        json.dumps({"config": cfg.to_dict(), "bias": bias}, indent=1, sort_keys=True) + "\n"
    )
    print(f"wrote {len(ds.dates)} days x {len(ds.stations)} stations to {out}")
    return 0


def cmd_evaluate(args) -> int:
    plan = _plan(args.plan, args.seed)
    ds = align(read_series_csv(args.insitu), read_series_csv(args.forecast))
    run = run_experiment(ds, plan)
    run.manifest["inputs"] = {
        "insitu": {"path": str(args.insitu), "sha256": _sha256(args.insitu)},
        "forecast": {"path": str(args.forecast), "sha256": _sha256(args.forecast)},
    }
    paths = emit_report(run.report, args.out, run)
    print(f"{len(run.report.records)} records, {len(run.report.failures)} failures -> {paths['results']}")
    return 0


def cmd_impute(args) -> int:
    plan = _plan(args.plan, args.seed)
    ds = align(read_series_csv(args.insitu), read_series_csv(args.forecast))
    model = fit_method(args.method, ds, plan)
    filled = impute_with(args.method, model, ds, plan)
    write_series_csv(filled, args.out)
    n = int((~ds.observed.mask).sum()) - int((~filled.mask).sum())
    print(f"filled {n} cells with {args.method} -> {args.out}")
    return 0


def cmd_report(args) -> int:
    report = read_results_csv(args.results)
    paths = emit_report(report, args.out, table2_rate=args.table2_rate)
    print(f"wrote {paths['summary']}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="streamfill", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="generate synthetic insitu.csv / forecast.csv")
    s.add_argument("--config", help="plan TOML with a [synth] section")
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_synth)

    e = sub.add_parser("evaluate", help="simulated-missingness benchmark")
    e.add_argument("--insitu", required=True)
    e.add_argument("--forecast", required=True)
    e.add_argument("--plan")
    e.add_argument("--out", required=True)
    e.add_argument("--seed", type=int)
    e.set_defaults(func=cmd_evaluate)

    i = sub.add_parser("impute", help="fill the gaps of an in-situ file")
    i.add_argument("--method", required=True, choices=METHODS)
    i.add_argument("--insitu", required=True)
    i.add_argument("--forecast", required=True)
    i.add_argument("--out", required=True)
    i.add_argument("--plan")
    i.add_argument("--seed", type=int)
    i.set_defaults(func=cmd_impute)

    r = sub.add_parser("report", help="rebuild summary.md from results.csv")
    r.add_argument("--results", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--table2-rate", type=float, default=0.2)
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (StreamfillError, OSError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
