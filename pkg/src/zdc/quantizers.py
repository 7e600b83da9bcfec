"""The action space: maps from source symbols to channel symbols.

A quantizer is stored as a tuple (or integer array) ``Q`` of length ``m`` with
``Q[x] in 0..M-1``. Quantizers are plain values; two maps that differ only by
a relabeling of channel symbols are different quantizers.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb
from typing import Iterator

import numpy as np

from .errors import BudgetExceeded, ModeMismatch, SymbolOutOfRange

MODES = ("full", "surjective", "convex_bins")
DEFAULT_BUDGET = 5 * 10**6


@dataclass(frozen=True)
class QuantizerSpace:
    """All quantizers from ``m`` source symbols to ``M`` channel symbols.

    ``convex_bins`` keeps only maps whose bins are contiguous runs of symbols
    in increasing value order, labelled ``0, 1, ...`` from left to right
    (empty bins allowed). ``order`` gives the symbols sorted by value and
    defaults to ``0..m-1``.
    """

    m: int
    M: int
    mode: str = "full"
    order: tuple | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ModeMismatch(f"unknown mode {self.mode!r}")
        if self.m < 1 or self.M < 1:
            raise ValueError("m and M must be positive")

    @property
    def size(self) -> int:
        if self.mode == "full":
            return self.M**self.m
        if self.mode == "convex_bins":
            return comb(self.m + self.M - 1, self.M - 1)
        # maps onto all M symbols, by inclusion-exclusion
        return sum((-1) ** j * comb(self.M, j) * (self.M - j) ** self.m for j in range(self.M + 1))

    @property
    def symbol_order(self) -> np.ndarray:
        return np.arange(self.m) if self.order is None else np.asarray(self.order)


def _sizes_to_map(sizes, order):
    labels = np.repeat(np.arange(len(sizes)), sizes)
    Q = np.empty(len(order), dtype=np.int64)
    Q[order] = labels
    return Q


def _compositions(total, parts):
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def enumerate_quantizers(space: QuantizerSpace, budget: int = DEFAULT_BUDGET) -> Iterator[tuple]:
    """Yield every member of ``space`` once, as tuples.

    Full and surjective modes yield in lexicographic order. With the default
    symbol order, convex-bin maps are also lexicographically increasing.
    """
    if space.size > budget:
        raise BudgetExceeded(f"{space.size} quantizers exceed budget {budget}")
    if space.mode == "convex_bins":
        order = space.symbol_order
        for sizes in _compositions(space.m, space.M):
            yield tuple(int(v) for v in _sizes_to_map(sizes, order))
        return
    for Q in itertools.product(range(space.M), repeat=space.m):
        if space.mode == "surjective" and len(set(Q)) < space.M:
            continue
        yield Q


def quantizer_array(space: QuantizerSpace, budget: int = DEFAULT_BUDGET) -> np.ndarray:
    """All members stacked into an ``(size, m)`` array, same order as
    ``enumerate_quantizers``."""
    if space.size > budget:
        raise BudgetExceeded(f"{space.size} quantizers exceed budget {budget}")
    if space.mode == "full":
        idx = np.arange(space.size)
        powers = space.M ** np.arange(space.m - 1, -1, -1)
        return (idx[:, None] // powers) % space.M
    return np.array(list(enumerate_quantizers(space, budget)), dtype=np.int64).reshape(-1, space.m)


def sample_batch(space: QuantizerSpace, rng, size: int) -> np.ndarray:
    """``size`` independent uniform draws from ``space``, shape ``(size, m)``.

    Full mode draws each ``Q(x)`` independently and uniformly from ``0..M-1``,
    which is uniform over all ``M**m`` maps. Convex-bin mode draws a uniform
    composition of ``m`` into ``M`` parts (stars and bars).
    """
    if space.mode == "full":
        return rng.integers(0, space.M, size=(size, space.m))
    if space.mode == "convex_bins":
        slots = space.m + space.M - 1
        # uniform (M-1)-subsets of the slots mark the bars
        bars = np.argsort(rng.random((size, slots)), axis=1)[:, : space.M - 1]
        is_bar = np.zeros((size, slots), dtype=bool)
        is_bar[np.arange(size)[:, None], bars] = True
        # label of each star = number of bars before it
        labels = np.cumsum(is_bar, axis=1)[~is_bar].reshape(size, space.m)
        out = np.empty_like(labels)
        out[:, space.symbol_order] = labels
        return out
    raise ModeMismatch("uniform sampling is defined for full and convex_bins modes only")


def sample_uniform(space: QuantizerSpace, rng) -> tuple:
    return tuple(int(v) for v in sample_batch(space, rng, 1)[0])


def apply(Q, x: int) -> int:
    """Channel symbol ``Q(x)``."""
    if not 0 <= x < len(Q):
        raise SymbolOutOfRange(f"source symbol {x} outside 0..{len(Q) - 1}")
    return int(Q[x])


def identity_quantizer(m: int) -> tuple:
    return tuple(range(m))


def uninformative_quantizer(m: int) -> tuple:
    return (0,) * m
