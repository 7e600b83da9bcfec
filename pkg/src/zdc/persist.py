"""JSON round-tripping of sources, Q-tables, policies and O-FSSQ codebooks.

Floats are written with ``repr`` precision, so a save/load round trip is
exact and identical inputs produce byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .baselines import OFSSQCodebooks, ScalarQuantizer
from .errors import SchemaError
from .qlearning import Policy, QTable
from .source import FiniteSource, source_from_spec

VERSION = 1


def dump_json(obj, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, separators=(",", ":")) + "\n")


def read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from exc


def _check_version(doc):
    if not isinstance(doc, dict):
        raise SchemaError("expected a JSON object")
    if doc.get("version", VERSION) != VERSION:
        raise SchemaError(f"unsupported version {doc.get('version')!r}")


def _counts(state, n, m=None):
    counts = tuple(int(c) for c in state)
    if any(c < 0 for c in counts) or sum(counts) != n or (m is not None and len(counts) != m):
        raise SchemaError(f"state {list(state)} is not a composition of n={n}")
    return counts


def _action(action, M, m=None):
    a = tuple(int(v) for v in action)
    if any(not 0 <= v < M for v in a) or (m is not None and len(a) != m):
        raise SchemaError(f"quantizer {list(action)} invalid for M={M}")
    return a


def policy_to_dict(policy: Policy) -> dict:
    return {
        "version": VERSION,
        "n": policy.n,
        "M": policy.M,
        "fallback": list(policy.fallback),
        "map": [{"state": list(s), "action": list(a)} for s, a in sorted(policy.action_map.items())],
    }


def policy_from_dict(doc) -> Policy:
    _check_version(doc)
    try:
        n, M = int(doc["n"]), int(doc["M"])
        fallback = _action(doc["fallback"], M)
        m = len(fallback)
        action_map = {_counts(e["state"], n, m): _action(e["action"], M, m) for e in doc["map"]}
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(f"malformed policy: {exc}") from exc
    return Policy(n, M, fallback, dict(sorted(action_map.items())))


def save_policy(policy: Policy, path) -> None:
    dump_json(policy_to_dict(policy), path)


def load_policy(path) -> Policy:
    return policy_from_dict(read_json(path))


def qtable_to_dict(table: QTable) -> dict:
    return {
        "version": VERSION,
        "n": table.n,
        "beta": table.beta,
        "m": table.m,
        "M": table.M,
        "entries": [
            {"state": list(s), "action": list(a), "q": q, "visits": k}
            for s, a, q, k in table.entries()
        ],
    }


def qtable_from_dict(doc, n_actions: int | None = None) -> QTable:
    _check_version(doc)
    try:
        n, m, M = int(doc["n"]), int(doc["m"]), int(doc["M"])
        table = QTable(n, float(doc["beta"]), m, M, n_actions or M**m)
        for e in doc["entries"]:
            s = _counts(e["state"], n, m)
            a = _action(e["action"], M, m)
            visits = int(e["visits"])
            table.rows.setdefault(s, {})[a] = [float(e["q"]), visits]
            table.state_visits[s] = table.state_visits.get(s, 0) + visits
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(f"malformed Q-table: {exc}") from exc
    return table


def save_qtable(table: QTable, path) -> None:
    dump_json(qtable_to_dict(table), path)


def load_qtable(path, n_actions: int | None = None) -> QTable:
    return qtable_from_dict(read_json(path), n_actions)


def codebooks_to_dict(cb: OFSSQCodebooks) -> dict:
    return {
        "version": VERSION,
        "K": cb.K,
        "classifier": cb.classifier.codebook.tolist(),
        "per_state": [sq.codebook.tolist() for sq in cb.per_state],
    }


def codebooks_from_dict(doc) -> OFSSQCodebooks:
    _check_version(doc)
    try:
        classifier = ScalarQuantizer(np.asarray(doc["classifier"], dtype=float))
        per_state = tuple(ScalarQuantizer(np.asarray(c, dtype=float)) for c in doc["per_state"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed codebooks: {exc}") from exc
    return OFSSQCodebooks(classifier, per_state)


def save_codebooks(cb: OFSSQCodebooks, path) -> None:
    dump_json(codebooks_to_dict(cb), path)


def load_codebooks(path) -> OFSSQCodebooks:
    return codebooks_from_dict(read_json(path))


def load_source(path) -> FiniteSource:
    return source_from_spec(read_json(path))
