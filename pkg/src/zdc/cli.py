"""Command-line entry point ``zdc``.

Subcommands::

    zdc train --config <path>
    zdc eval --policy <path> --source <path> --samples N --seed S
    zdc experiment --config <path> --workers W
    zdc plot --results <csv> --out-dir <dir>

Set ``ZDC_LOG`` (DEBUG, INFO, WARNING, ...) to control log verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict

from . import persist
from .belief import squared_error
from .errors import ConfigParse, ZdcError
from .evaluation import evaluate_policy
from .experiment import emit_plot_data, run_experiment, train_config
from .qlearning import extract_policy, train
from .quantizers import QuantizerSpace
from .source import source_from_spec


def _train(args) -> int:
    doc = persist.read_json(args.config)
    for key in ("source", "M", "n", "policy_out"):
        if key not in doc:
            raise ConfigParse(f"training config is missing {key!r}")
    source = source_from_spec(doc["source"])
    dist = squared_error(source.values)
    cfg = train_config(doc, int(doc.get("seed", 0)))
    space = QuantizerSpace(source.m, int(doc["M"]), doc.get("action_space", "full"))
    table, stats = train(source, dist, space, cfg)
    policy = extract_policy(table, cfg, space, source, dist)
    persist.save_policy(policy, doc["policy_out"])
    if doc.get("table_out"):
        persist.save_qtable(table, doc["table_out"])
    print(json.dumps({**asdict(stats), "policy_states": len(policy.action_map)}))
    return 0


def _eval(args) -> int:
    policy = persist.load_policy(args.policy)
    source = persist.load_source(args.source)
    report = evaluate_policy(source, policy, squared_error(source.values), args.samples, args.seed,
                             n=args.n)
    print(json.dumps(report.to_dict()))
    return 0


def _experiment(args) -> int:
    return run_experiment(args.config, workers=args.workers)


def _plot(args) -> int:
    print(emit_plot_data(args.results, args.out_dir))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zdc", description="Zero-delay quantizer design for Markov sources")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train an encoder policy")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_train)

    p = sub.add_parser("eval", help="evaluate a saved policy")
    p.add_argument("--policy", required=True)
    p.add_argument("--source", required=True)
    p.add_argument("--samples", type=int, default=10**6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=None, help="expected lattice parameter of the policy")
    p.set_defaults(func=_eval)

    p = sub.add_parser("experiment", help="run an SNR-vs-rate experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=_experiment)

    p = sub.add_parser("plot", help="pivot a results CSV into plot data")
    p.add_argument("--results", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_plot)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("ZDC_LOG", "WARNING").upper(),
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
        stream=sys.stderr,
    )
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ZdcError as exc:
        print(f"zdc: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
