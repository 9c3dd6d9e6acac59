"""Command-line entry points.

Subcommands:
  simulate   write the experiment's dataset (CSV + manifest)
  fit        run a single replicate and print the estimate
  replicate  run the full replication batch and summarize it
  qq         export normal qq data for the summary statistics
  report     re-summarize persisted batch results without re-running
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import experiments
from .experiments import ExperimentConfig, load_config


def _add_common(p, config_required=True):
    p.add_argument("--config", required=config_required, help="experiment YAML")
    p.add_argument("--seed", type=int, default=None, help="override base seed")
    p.add_argument("--out", default="out", help="output directory")


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.base_seed = args.seed
    return cfg


def cmd_simulate(args) -> int:
    cfg = _load(args)
    out = experiments.make_dataset(cfg, f"{args.out}/{cfg.name}/dataset")
    print(f"dataset written to {out}")
    return 0


def cmd_fit(args) -> int:
    cfg = _load(args)
    res = experiments.run_replicate(cfg, args.replicate,
                                    f"{args.out}/{cfg.name}")
    print(json.dumps({"status": res.status, "final": res.final,
                      "walltime": res.walltime, "error": res.error}, indent=2))
    return 0 if res.status == "ok" else 1


def cmd_replicate(args) -> int:
    cfg = _load(args)
    results = experiments.run_batch(cfg, args.out, workers=args.workers)
    names = list(cfg.build_model().space.names)
    table = experiments.summarize_batch(results, names)
    print(table.text())
    ok_frac = table.n_ok / table.n_total
    return 0 if ok_frac >= 0.9 else 1


def cmd_qq(args) -> int:
    cfg = _load(args)
    model = cfg.build_model()
    theta = model.space.from_dict(cfg.theta_true)
    rng = np.random.default_rng(cfg.base_seed if args.seed is None else args.seed)
    records = experiments.export_qq_data(model, theta, args.r, rng)
    out = f"{args.out}/{cfg.name}/qq"
    experiments.write_qq_data(out, records)
    for rec in records:
        flag = "degenerate" if rec["degenerate"] else f"corr={rec['correlation']:.4f}"
        print(f"{rec['label']}: {flag}")
    print(f"qq data written to {out}")
    return 0


def cmd_report(args) -> int:
    results, names = experiments.reload_results(args.dir)
    table = experiments.summarize_batch(results, names)
    experiments.write_summary(args.dir, table)
    print(table.text())
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="saemsl",
        description="Likelihood-free estimation experiments: synthetic-"
                    "likelihood SAEM and its baselines.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write the experiment dataset")
    _add_common(p)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("fit", help="run a single replicate")
    _add_common(p)
    p.add_argument("--replicate", type=int, default=0)
    p.set_defaults(fn=cmd_fit)

    p = sub.add_parser("replicate", help="run the replication batch")
    _add_common(p)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(fn=cmd_replicate)

    p = sub.add_parser("qq", help="export summary qq diagnostics")
    _add_common(p)
    p.add_argument("--r", type=int, default=2000, help="number of simulations")
    p.set_defaults(fn=cmd_qq)

    p = sub.add_parser("report", help="re-summarize persisted results")
    p.add_argument("--dir", required=True, help="experiment output directory")
    p.set_defaults(fn=cmd_report)

    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
