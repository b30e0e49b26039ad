"""Command-line entry point: ``osrtemp {generate-data,train,evaluate,sweep,report}``.

Exit codes: 0 success, 1 config error, 2 run failure, 3 partial sweep failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import data as data_mod
from .errors import ConfigError
from .harness import (ExperimentConfig, SweepConfig, evaluate, report, sweep, train)
from .nn import load_checkpoint

EXIT_OK, EXIT_CONFIG, EXIT_RUN, EXIT_PARTIAL = 0, 1, 2, 3


def _generate(args):
    spec = data_mod.GeneratorSpec(
        n_classes_total=args.n_classes_total, n_known=args.n_known, dim=args.dim,
        samples_per_class=args.samples_per_class, cluster_spread=args.spread,
        cluster_placement=args.placement, nonlinearity=args.nonlinearity, seed=args.seed)
    split = data_mod.generate(spec)
    data_mod.save_dataset(split, args.out, args.manifest)
    print(f"wrote {args.out} ({len(split.train_y)} train, {len(split.test_known_y)} known test,"
          f" {len(split.test_unknown_y)} unknown test)")
    return EXIT_OK


def _train_config(args):
    try:
        raw = json.loads(Path(args.config).read_text()) if args.config else {}
    except OSError as exc:
        raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    for key in ("loss", "epochs", "seed", "dataset", "output", "alpha"):
        value = getattr(args, key)
        if value is not None:
            raw[key] = value
    if args.schedule:
        raw["schedule"] = json.loads(args.schedule)
    return ExperimentConfig.from_dict(raw)


def _train(args):
    config = _train_config(args)
    if not config.output:
        raise ConfigError("train needs an output directory (--output or 'output' in config)")
    _, record = train(config)
    print(json.dumps(record.result.to_dict()))
    return EXIT_OK


def _evaluate(args):
    net = load_checkpoint(args.checkpoint)
    split = data_mod.load_dataset(args.dataset, args.manifest)
    result = evaluate(net, split, scores_path=args.scores)
    text = json.dumps(result.to_dict(), indent=2)
    if args.out:
        Path(args.out).write_text(text)
    print(text)
    return EXIT_OK


def _sweep(args):
    cfg = SweepConfig.from_json(args.config)
    overrides = {k: v for k, v in (("output", args.output), ("workers", args.workers)) if v}
    if args.record_timing:
        overrides["record_timing"] = True
    cfg = dataclasses.replace(cfg, **overrides)
    if not cfg.output:
        raise ConfigError("sweep needs an output directory (--output or 'output' in config)")
    result = sweep(cfg.configs(), workers=cfg.workers, output_dir=cfg.output,
                   record_timing=cfg.record_timing)
    for entry in result.improvements:
        print(f"{entry['label']}: improvement auroc={entry['auroc']:+.4f} "
              f"accuracy={entry['accuracy']:+.4f} oscr={entry['oscr']:+.4f}")
    if result.all_failed:
        return EXIT_RUN
    return EXIT_PARTIAL if result.failures else EXIT_OK


def _report(args):
    out = report(args.results, args.output, epochs=args.epochs)
    for row in out["k_sweep"]:
        print(f"k={row['k']:g}  {row['label']}  auroc={row['auroc_mean']:.4f} "
              f"(+/- {row['auroc_std']:.4f}, n={row['n']})")
    for entry in out["improvements"]:
        print(f"{entry['label']}: improvement auroc={entry['auroc']:+.4f}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="osrtemp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate-data", help="write a synthetic open-set dataset")
    g.add_argument("--out", required=True)
    g.add_argument("--manifest")
    defaults = data_mod.GeneratorSpec()
    g.add_argument("--n-classes-total", type=int, default=defaults.n_classes_total)
    g.add_argument("--n-known", type=int, default=defaults.n_known)
    g.add_argument("--dim", type=int, default=defaults.dim)
    g.add_argument("--samples-per-class", type=int, default=defaults.samples_per_class)
    g.add_argument("--spread", type=float, default=defaults.cluster_spread)
    g.add_argument("--placement", default=defaults.cluster_placement,
                   choices=data_mod.PLACEMENTS)
    g.add_argument("--nonlinearity", default=defaults.nonlinearity,
                   choices=data_mod.NONLINEARITIES)
    g.add_argument("--seed", type=int, default=defaults.seed)
    g.set_defaults(func=_generate)

    t = sub.add_parser("train", help="train one model")
    t.add_argument("--config", help="experiment config JSON")
    t.add_argument("--loss", choices=["ce", "supcon", "supcon_ls"])
    t.add_argument("--alpha", type=float)
    t.add_argument("--epochs", type=int)
    t.add_argument("--seed", type=int)
    t.add_argument("--dataset", help="dataset CSV (manifest alongside)")
    t.add_argument("--schedule", help='schedule as JSON, e.g. \'{"kind": "NegCos", '
                                      '"tau_plus": 2.0, "tau_minus": 0.5}\'')
    t.add_argument("--output")
    t.set_defaults(func=_train)

    e = sub.add_parser("evaluate", help="score a checkpoint on a dataset")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--dataset", required=True)
    e.add_argument("--manifest")
    e.add_argument("--scores", help="write per-sample scores CSV here")
    e.add_argument("--out", help="write the EvalResult JSON here")
    e.set_defaults(func=_evaluate)

    s = sub.add_parser("sweep", help="run a schedules x seeds sweep")
    s.add_argument("--config", required=True)
    s.add_argument("--output")
    s.add_argument("--workers", type=int)
    s.add_argument("--record-timing", action="store_true",
                   help="fill wall_seconds (makes results.csv non-reproducible)")
    s.set_defaults(func=_sweep)

    r = sub.add_parser("report", help="tables and plot-ready CSVs from a results CSV")
    r.add_argument("--results", required=True)
    r.add_argument("--output", required=True)
    r.add_argument("--epochs", type=int, default=600)
    r.set_defaults(func=_report)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        print(f"run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUN


if __name__ == "__main__":
    sys.exit(main())
