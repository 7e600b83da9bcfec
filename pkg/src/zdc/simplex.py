"""Quantization of beliefs onto the type lattice ``{k/n : k_i >= 0, sum k = n}``."""

from __future__ import annotations

from dataclasses import dataclass
from math import comb, sqrt
from typing import Iterator

import numpy as np

from .errors import BudgetExceeded, LatticeOverflow, SchemaError

INT64_MAX = 2**63 - 1
DEFAULT_BUDGET = 10**7


@dataclass(frozen=True)
class TypeVector:
    counts: tuple
    n: int

    def __post_init__(self):
        if sum(self.counts) != self.n or min(self.counts) < 0:
            raise SchemaError(f"counts {self.counts} are not a composition of {self.n}")

    @property
    def probs(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=float) / self.n


def quantize_counts(p, n: int) -> np.ndarray:
    """Nearest lattice point to ``p`` (Euclidean), as integer counts.

    Round every coordinate, then repair the total by moving the coordinates
    with the most extreme rounding error. Ties in the rounding error are
    resolved by a stable sort, i.e. by original index.
    """
    p = np.asarray(p, dtype=float)
    scaled = n * p
    k = np.floor(scaled + 0.5).astype(np.int64)
    excess = int(k.sum()) - n
    if excess == 0:
        return k
    order = np.argsort(k - scaled, kind="stable")
    if excess > 0:
        k[order[len(k) - excess:]] -= 1
    else:
        k[order[:-excess]] += 1
    return k


def quantize(p, n: int) -> TypeVector:
    if n < 1:
        raise ValueError("lattice parameter n must be >= 1")
    return TypeVector(tuple(int(c) for c in quantize_counts(p, n)), n)


def lattice_size(m: int, n: int) -> int:
    """Number of lattice points, ``C(n + m - 1, m - 1)``."""
    if m < 1 or n < 0:
        raise ValueError("need m >= 1 and n >= 0")
    size = comb(n + m - 1, m - 1)
    if size > INT64_MAX:
        raise LatticeOverflow(f"lattice size C({n + m - 1}, {m - 1}) exceeds int64")
    return size


def _compositions(m, n):
    if m == 1:
        yield (n,)
        return
    for first in range(n, -1, -1):
        for rest in _compositions(m - 1, n - first):
            yield (first,) + rest


def enumerate_lattice(m: int, n: int, budget: int = DEFAULT_BUDGET) -> Iterator[TypeVector]:
    """All lattice points, first coordinate descending (``(n,0,..)`` first)."""
    if lattice_size(m, n) > budget:
        raise BudgetExceeded(f"lattice of size {lattice_size(m, n)} exceeds budget {budget}")
    for counts in _compositions(m, n):
        yield TypeVector(counts, n)


def table_key(t: TypeVector) -> tuple:
    """Hashable Q-table row key; the counts tuple itself."""
    return t.counts


def key_to_type(key, n: int) -> TypeVector:
    return TypeVector(tuple(int(c) for c in key), n)


def max_bin_radius(m: int, n: int) -> float:
    """Bound ``sqrt(m)/n`` on the distance from any belief to its lattice point."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return sqrt(m) / n
