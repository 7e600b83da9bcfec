"""Config-driven SNR-versus-rate experiments and plot-data tables."""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import persist
from .baselines import lloyd_max, ofssq_run, scalar_run, train_ofssq
from .belief import squared_error
from .errors import ConfigParse, MissingMethod, ZdcError
from .evaluation import LOSSLESS, evaluate_policy
from .qlearning import TrainConfig, extract_policy, train
from .quantizers import QuantizerSpace
from .source import FiniteSource, sample_path, source_from_spec

log = logging.getLogger(__name__)

CSV_FIELDS = ["method", "rate_bits", "n", "K", "T", "seed", "avg_distortion", "snr_db"]
FAILED = "failed"
METHOD_TYPES = ("algorithm1", "ofssq", "lloyd_max")


@dataclass
class ExperimentConfig:
    name: str
    source: dict
    methods: list
    rates: list
    eval_samples: int
    seeds: list
    results_csv: Path
    artifacts_dir: Path
    train_samples: int = 10**6
    baseline: str | None = None
    workers: int = 1


def method_label(method: dict) -> str:
    if "label" in method:
        return method["label"]
    if method["type"] == "algorithm1":
        return f"algorithm1_n{method['n']}"
    if method["type"] == "ofssq":
        return f"ofssq_K{method['K']}"
    return method["type"]


def parse_config(doc: dict, name: str = "experiment") -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ConfigParse("experiment config must be a JSON object")
    for key in ("source", "methods", "rates", "eval_samples"):
        if key not in doc:
            raise ConfigParse(f"missing required key {key!r}")
    methods = doc["methods"]
    if not isinstance(methods, list) or not methods:
        raise ConfigParse("at least one method is required")
    for m in methods:
        if m.get("type") not in METHOD_TYPES:
            raise ConfigParse(f"unknown method {m.get('type')!r}")
        if m["type"] == "algorithm1" and "n" not in m:
            raise ConfigParse("algorithm1 needs a lattice parameter n")
        if m["type"] == "ofssq" and "K" not in m:
            raise ConfigParse("ofssq needs a state count K")
    rates = doc["rates"]
    if not isinstance(rates, list) or not rates or any(int(M) < 1 for M in rates):
        raise ConfigParse("rates must be a non-empty list of channel alphabet sizes")
    labels = [method_label(m) for m in methods]
    if len(set(labels)) != len(labels):
        raise ConfigParse(f"duplicate method labels {labels}")
    baseline = doc.get("baseline")
    if baseline is not None and baseline not in labels:
        raise ConfigParse(f"baseline {baseline!r} is not one of {labels}")
    name = doc.get("name", name)
    out = doc.get("output", {})
    return ExperimentConfig(
        name=name,
        source=doc["source"],
        methods=methods,
        rates=[int(M) for M in rates],
        eval_samples=int(doc["eval_samples"]),
        seeds=[int(s) for s in doc.get("seeds", [0])],
        results_csv=Path(out.get("results_csv", f"results/{name}.csv")),
        artifacts_dir=Path(out.get("artifacts_dir", f"results/{name}_artifacts")),
        train_samples=int(doc.get("train_samples", 10**6)),
        baseline=baseline,
        workers=int(doc.get("workers", 1)),
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        doc = persist.read_json(path)
    except ZdcError as exc:
        raise ConfigParse(str(exc)) from exc
    return parse_config(doc, path.stem)


def derived_seed(seed: int, stream: int) -> int:
    """Independent integer seed for a given stream (training, baseline data, ...)."""
    return int(np.random.SeedSequence([seed, stream]).generate_state(1)[0])


def train_config(method: dict, seed: int) -> TrainConfig:
    defaults = TrainConfig()
    return TrainConfig(
        n=int(method["n"]),
        beta=float(method.get("beta", defaults.beta)),
        stop_epsilon=float(method.get("stop_epsilon", defaults.stop_epsilon)),
        check_interval=int(method.get("check_interval", defaults.check_interval)),
        max_steps=int(method.get("max_steps", defaults.max_steps)),
        seed=derived_seed(seed, 1),
        min_state_visits=int(method.get("min_state_visits", defaults.min_state_visits)),
    )


def _format_float(v: float) -> str:
    return repr(float(v))


def _row(label, method, M, seed, T, report=None) -> dict:
    row = {
        "method": label,
        "rate_bits": _format_float(math.log2(M)),
        "n": method.get("n", ""),
        "K": method.get("K", ""),
        "T": T,
        "seed": seed,
        "avg_distortion": "",
        "snr_db": FAILED,
    }
    if report is not None:
        row["avg_distortion"] = _format_float(report.avg_distortion)
        row["snr_db"] = LOSSLESS if math.isinf(report.snr_db) else _format_float(report.snr_db)
    return row


def run_cell(source: FiniteSource, method: dict, M: int, seed: int, T: int, train_samples: int,
             artifacts_dir: Path):
    """Train (if needed), persist, and evaluate one (method, rate, seed) cell."""
    dist = squared_error(source.values)
    label = method_label(method)
    stem = artifacts_dir / f"{label}_M{M}_seed{seed}"
    kind = method["type"]
    if kind == "algorithm1":
        cfg = train_config(method, seed)
        space = QuantizerSpace(source.m, M, method.get("action_space", "full"))
        table, stats = train(source, dist, space, cfg)
        policy = extract_policy(table, cfg, space, source, dist)
        persist.save_policy(policy, stem.with_suffix(".policy.json"))
        if method.get("save_table", False):
            persist.save_qtable(table, stem.with_suffix(".qtable.json"))
        log.info("%s M=%d seed=%d: %d steps, %d states, policy on %d states",
                 label, M, seed, stats.steps, stats.distinct_states, len(policy.action_map))
        report = evaluate_policy(source, policy, dist, T, seed)
    elif kind == "ofssq":
        path = sample_path(source, train_samples, derived_seed(seed, 2), initial=source.invariant)
        cb = train_ofssq(source.values[path], int(method["K"]), M, dist,
                         method.get("classifier", "identity"))
        persist.save_codebooks(cb, stem.with_suffix(".codebooks.json"))
        report = ofssq_run(cb, source, T, seed, dist)
    else:
        sq = lloyd_max(M=M, values=source.values, weights=source.invariant,
                       reproduction_alphabet=dist.reproduction)
        persist.dump_json({"version": persist.VERSION, "codebook": sq.codebook.tolist()},
                          stem.with_suffix(".lloyd.json"))
        report = scalar_run(sq, source, T, seed, dist)
    return _row(label, method, M, seed, T, report)


def _safe_cell(args):
    source_doc, method, M, seed, T, train_samples, artifacts_dir = args
    try:
        return run_cell(source_from_spec(source_doc), method, M, seed, T, train_samples, artifacts_dir)
    except Exception:  # a failed cell is logged and recorded, the run continues
        log.exception("cell %s M=%d seed=%d failed", method_label(method), M, seed)
        return _row(method_label(method), method, M, seed, T)


def run_experiment(config, workers: int | None = None) -> int:
    """Run every (method, rate, seed) cell and write the results CSV.

    Returns a process exit code: 0 unless every cell failed.
    """
    cfg = config if isinstance(config, ExperimentConfig) else load_config(config)
    workers = workers or cfg.workers
    source_from_spec(cfg.source)  # validate before launching cells
    cells = [
        (cfg.source, method, M, seed, cfg.eval_samples, cfg.train_samples, cfg.artifacts_dir)
        for method in cfg.methods
        for M in cfg.rates
        for seed in cfg.seeds
    ]
    cfg.results_csv.parent.mkdir(parents=True, exist_ok=True)
    cfg.artifacts_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    with open(cfg.results_csv, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS, lineterminator="\n")
        writer.writeheader()
        if workers > 1:
            with ProcessPoolExecutor(workers) as pool:
                results = pool.map(_safe_cell, cells)
                for row in results:
                    writer.writerow(row)
                    fh.flush()
                    rows.append(row)
        else:
            for cell in cells:
                row = _safe_cell(cell)
                writer.writerow(row)
                fh.flush()
                rows.append(row)
    if cfg.baseline:
        summary = gain_summary(rows, cfg.baseline)
        path = cfg.results_csv.with_name(cfg.results_csv.stem + "_gains.csv")
        _write_table(path, ["rate_bits", "method", "snr_db", "gain_db"], summary)
        for r in summary:
            print(f"R={float(r['rate_bits']):.3f}  {r['method']:<16} SNR {float(r['snr_db']):8.3f} dB"
                  f"  gain {float(r['gain_db']):+.3f} dB")
    failed = sum(r["snr_db"] == FAILED for r in rows)
    if failed:
        log.error("%d of %d cells failed", failed, len(rows))
    return 1 if failed == len(rows) else 0


def _mean_snr(rows):
    """Seed-averaged SNR per (method, rate); lossless and failed rows are skipped."""
    acc: dict = {}
    order = []
    for r in rows:
        if r["snr_db"] in (FAILED, LOSSLESS):
            continue
        key = (r["method"], r["rate_bits"])
        if r["method"] not in order:
            order.append(r["method"])
        acc.setdefault(key, []).append(float(r["snr_db"]))
    return {k: sum(v) / len(v) for k, v in acc.items()}, order


def gain_summary(rows, baseline: str) -> list:
    snr, order = _mean_snr(rows)
    out = []
    rates = sorted({rate for _, rate in snr}, key=float)
    for rate in rates:
        if (baseline, rate) not in snr:
            continue
        base = snr[(baseline, rate)]
        for method in order:
            if method != baseline and (method, rate) in snr:
                out.append({"rate_bits": rate, "method": method,
                            "snr_db": _format_float(snr[(method, rate)]),
                            "gain_db": _format_float(snr[(method, rate)] - base)})
    return out


def _write_table(path, fields, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def read_results(path) -> list:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def emit_plot_data(results_csv, out_dir, methods=None) -> Path:
    """Pivot a results CSV into ``rate, <method>...`` rows sorted by rate.

    SNR is averaged over seeds. Every listed method (default: all methods
    present) must have a value at every rate.
    """
    rows = read_results(results_csv)
    snr, order = _mean_snr(rows)
    methods = list(methods) if methods else order
    rates = sorted({rate for _, rate in snr}, key=float)
    table = []
    for rate in rates:
        line = {"rate": rate}
        for method in methods:
            if (method, rate) not in snr:
                raise MissingMethod(f"no SNR for method {method!r} at rate {rate}")
            line[method] = _format_float(snr[(method, rate)])
        table.append(line)
    out = Path(out_dir) / f"{Path(results_csv).stem}_plot.csv"
    _write_table(out, ["rate"] + methods, table)
    return out
