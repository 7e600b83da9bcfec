"""Quantized Q-learning for zero-delay encoder design.

The learner runs on the true predictor ``pi_t`` (costs and dynamics are
exact) while the Q-table is indexed by the lattice quantization of ``pi_t``.
Quantizers are explored uniformly at random, and each visited entry uses the
learning rate ``1 / (1 + number of earlier updates of that entry)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .belief import MASS_TOL, DistortionSpec, stage_costs_many
from .errors import ConfigMismatch, EmptyTable, ModeMismatch, ZeroMassBin
from .quantizers import QuantizerSpace, quantizer_array, sample_batch
from .simplex import quantize_counts
from .source import FiniteSource

log = logging.getLogger(__name__)

_BATCH = 4096


@dataclass(frozen=True)
class TrainConfig:
    n: int = 5
    beta: float = 0.9999
    stop_epsilon: float = 1e-4
    check_interval: int = 10_000
    max_steps: int = 5_000_000
    seed: int = 0
    min_state_visits: int = 10

    def __post_init__(self):
        if not 0 < self.beta < 1:
            raise ValueError(f"beta must lie in (0, 1), got {self.beta}")
        if self.stop_epsilon <= 0:
            raise ValueError("stop_epsilon must be positive")
        if self.n < 1 or self.check_interval < 1 or self.max_steps < 1:
            raise ValueError("n, check_interval and max_steps must be positive")


@dataclass
class TrainStats:
    steps: int
    distinct_states: int
    final_delta: float
    converged: bool

    @property
    def reached_max_steps(self) -> bool:
        return not self.converged


class QTable:
    """Sparse Q-factors: ``rows[state][action] = [q_value, visits]``.

    Unvisited entries are implicitly zero. States and actions are tuples of
    ints (lattice counts and quantizer maps).
    """

    def __init__(self, n: int, beta: float, m: int, M: int, n_actions: int):
        self.n = n
        self.beta = beta
        self.m = m
        self.M = M
        self.n_actions = n_actions
        self.rows: dict[tuple, dict[tuple, list]] = {}
        self.state_visits: dict[tuple, int] = {}
        self._row_min: dict[tuple, float] = {}

    def __len__(self):
        return sum(len(r) for r in self.rows.values())

    def get(self, state, action) -> float:
        entry = self.rows.get(state, {}).get(action)
        return 0.0 if entry is None else entry[0]

    def visits(self, state, action) -> int:
        entry = self.rows.get(state, {}).get(action)
        return 0 if entry is None else entry[1]

    def min_value(self, state) -> float:
        """``min_v Q(state, v)`` over the whole action set."""
        row = self.rows.get(state)
        if row is None or len(row) < self.n_actions:
            return 0.0
        cached = self._row_min.get(state)
        if cached is None:
            cached = min(e[0] for e in row.values())
            self._row_min[state] = cached
        return cached

    def update(self, state, action, target: float) -> tuple[float, float]:
        """Apply one Q-learning update; returns ``(alpha, old_value)``."""
        row = self.rows.get(state)
        if row is None:
            row = self.rows[state] = {}
        entry = row.get(action)
        if entry is None:
            entry = row[action] = [0.0, 0]
        old = entry[0]
        alpha = 1.0 / (1 + entry[1])
        new = (1.0 - alpha) * old + alpha * target
        entry[0] = new
        entry[1] += 1
        self.state_visits[state] = self.state_visits.get(state, 0) + 1
        cached = self._row_min.get(state)
        if cached is not None:
            if new < cached:
                self._row_min[state] = new
            elif old == cached and new > old:
                del self._row_min[state]
        return alpha, old

    def snapshot(self) -> dict:
        return {(s, a): e[0] for s, row in self.rows.items() for a, e in row.items()}

    def copy(self) -> "QTable":
        other = QTable(self.n, self.beta, self.m, self.M, self.n_actions)
        other.rows = {s: {a: list(e) for a, e in row.items()} for s, row in self.rows.items()}
        other.state_visits = dict(self.state_visits)
        return other

    def entries(self):
        """``(state, action, q, visits)`` in sorted order."""
        for s in sorted(self.rows):
            row = self.rows[s]
            for a in sorted(row):
                yield s, a, row[a][0], row[a][1]


def sup_norm_delta(a: QTable, b: QTable) -> float:
    """Largest absolute Q-value difference; entries missing from one table count as 0."""
    if a.n != b.n or a.beta != b.beta:
        raise ConfigMismatch(f"tables differ in (n, beta): {(a.n, a.beta)} vs {(b.n, b.beta)}")
    sa, sb = a.snapshot(), b.snapshot()
    return max((abs(sa.get(k, 0.0) - sb.get(k, 0.0)) for k in sa.keys() | sb.keys()), default=0.0)


class QLearner:
    """Step-by-step runner of the learning loop; ``train`` drives it."""

    def __init__(self, source: FiniteSource, dist: DistortionSpec, space: QuantizerSpace,
                 cfg: TrainConfig, initial=None):
        if space.mode not in ("full", "convex_bins"):
            raise ModeMismatch("training explores uniformly; use a full or convex_bins space")
        if space.m != source.m:
            raise ConfigMismatch(f"space has m={space.m}, source has m={source.m}")
        self.source = source
        self.space = space
        self.cfg = cfg
        self.table = QTable(cfg.n, cfg.beta, space.m, space.M, space.size)
        self._P = np.asarray(source.P)
        self._cum = source.cumulative
        self._D = dist.matrix
        self._eye = np.eye(space.M)
        self._rng = np.random.default_rng(cfg.seed)
        self._uniforms = np.empty(0)
        self._actions = np.empty((0, space.m), dtype=np.int64)
        self._ku = 0
        self._ka = 0

        pi0 = np.asarray(source.initial if initial is None else initial, dtype=float)
        self.x = self._draw(np.cumsum(pi0))
        self.pi = pi0 / pi0.sum()
        self.state = tuple(quantize_counts(self.pi, cfg.n).tolist())
        self.action = self._next_action()
        self.t = 0

    def _next_action(self):
        if self._ka >= len(self._actions):
            self._actions = sample_batch(self.space, self._rng, _BATCH)
            self._ka = 0
        a = self._actions[self._ka]
        self._ka += 1
        return a

    def _draw(self, cum):
        if self._ku >= len(self._uniforms):
            self._uniforms = self._rng.random(_BATCH)
            self._ku = 0
        u = self._uniforms[self._ku]
        self._ku += 1
        i = int(np.searchsorted(cum, u, side="right"))
        return i if i < len(cum) else len(cum) - 1

    def cost(self, pi, a) -> float:
        return float(((self._eye[:, a] * pi) @ self._D).min(axis=1).sum())

    def step(self):
        """Advance one time step; returns ``(state, action, alpha)`` of the updated entry."""
        pi, a, x = self.pi, self.action, self.x
        c = self.cost(pi, a)
        x_next = self._draw(self._cum[x])
        w = np.where(a == a[x], pi, 0.0)
        mass = w.sum()
        if mass <= MASS_TOL:
            raise ZeroMassBin(f"channel symbol {a[x]} has belief mass {mass:.3g}", step=self.t)
        nxt = w @ self._P
        nxt /= nxt.sum()
        s_next = tuple(quantize_counts(nxt, self.cfg.n).tolist())
        target = c + self.cfg.beta * self.table.min_value(s_next)
        key = (self.state, tuple(a.tolist()))
        alpha, old = self.table.update(key[0], key[1], target)
        self._last_old = old
        self.pi, self.x, self.state = nxt, x_next, s_next
        self.action = self._next_action()
        self.t += 1
        return key[0], key[1], alpha


def train(source: FiniteSource, dist: DistortionSpec, space: QuantizerSpace, cfg: TrainConfig,
          initial=None) -> tuple[QTable, TrainStats]:
    """Run the learning loop until the windowed sup-norm change of the table
    over ``check_interval`` steps is at most ``stop_epsilon``, or until
    ``max_steps``."""
    learner = QLearner(source, dist, space, cfg, initial)
    table = learner.table
    window: dict = {}
    delta = float("inf")
    converged = False
    while learner.t < cfg.max_steps:
        s, a, _ = learner.step()
        if (s, a) not in window:
            window[(s, a)] = learner._last_old
        if learner.t % cfg.check_interval == 0:
            delta = max((abs(table.rows[k[0]][k[1]][0] - v) for k, v in window.items()), default=0.0)
            window.clear()
            log.info("step %d: sup-norm delta %.3e, %d states visited",
                     learner.t, delta, len(table.rows))
            if delta <= cfg.stop_epsilon:
                converged = True
                break
    if not converged:
        log.warning("reached max_steps=%d without meeting stop_epsilon=%g (last delta %.3e)",
                    cfg.max_steps, cfg.stop_epsilon, delta)
    return table, TrainStats(learner.t, len(table.rows), delta, converged)


@dataclass
class Policy:
    """Stationary encoder policy on lattice points, with a fallback action."""

    n: int
    M: int
    fallback: tuple
    action_map: dict = field(default_factory=dict)

    def action(self, state) -> tuple:
        return self.action_map.get(state, self.fallback)


def _convex_best(pi, dist, space):
    order = space.symbol_order
    weighted = pi[order, None] * dist.matrix[order]
    S = np.vstack([np.zeros(weighted.shape[1]), np.cumsum(weighted, axis=0)])
    m = space.m
    seg = np.full((m + 1, m + 1), np.inf)
    for i in range(m + 1):
        seg[i, i:] = (S[i:] - S[i]).min(axis=1)
    # best[l, k]: first k symbols covered by bins 0..l
    best = seg[0].copy()
    back = np.zeros((space.M, m + 1), dtype=np.int64)
    for label in range(1, space.M):
        total = best[:, None] + seg
        back[label] = np.argmin(total, axis=0)
        best = total[back[label], np.arange(m + 1)]
    sizes = []
    k = m
    for label in range(space.M - 1, 0, -1):
        i = back[label, k]
        sizes.append(k - i)
        k = i
    sizes.append(k)
    sizes = sizes[::-1]
    Q = np.empty(m, dtype=np.int64)
    Q[order] = np.repeat(np.arange(space.M), sizes)
    return tuple(int(v) for v in Q)


def best_quantizer(pi, dist: DistortionSpec, space: QuantizerSpace, chunk: int = 1 << 16) -> tuple:
    """Quantizer in ``space`` minimizing the one-step cost at ``pi``.

    Convex-bin spaces are searched by dynamic programming over segment
    boundaries; other modes by exhaustive enumeration.
    """
    pi = np.asarray(pi, dtype=float)
    if space.mode == "convex_bins":
        return _convex_best(pi, dist, space)
    if space.mode == "full":
        powers = space.M ** np.arange(space.m - 1, -1, -1)
        best_val, best_idx = np.inf, 0
        for start in range(0, space.size, chunk):
            idx = np.arange(start, min(start + chunk, space.size))
            Qs = (idx[:, None] // powers) % space.M
            costs = stage_costs_many(pi, Qs, dist)
            j = int(np.argmin(costs))
            if costs[j] < best_val:
                best_val, best_idx = costs[j], int(idx[j])
        return tuple(int(v) for v in (best_idx // powers) % space.M)
    Qs = quantizer_array(space)
    return tuple(int(v) for v in Qs[int(np.argmin(stage_costs_many(pi, Qs, dist)))])


def extract_policy(table: QTable, cfg: TrainConfig, space: QuantizerSpace,
                   source: FiniteSource, dist: DistortionSpec) -> Policy:
    """Greedy policy on the states visited at least ``min_state_visits`` times.

    At each such state the action is the visited quantizer with the smallest
    Q-value (ties to the lexicographically smallest map). Unvisited actions
    are excluded because their zero initial value is not an estimate. The
    fallback is the one-step optimal quantizer at the invariant distribution.
    """
    if not table.rows:
        raise EmptyTable("Q-table has no entries")
    action_map = {}
    for s, row in table.rows.items():
        if table.state_visits[s] < cfg.min_state_visits:
            continue
        action_map[s] = min(row, key=lambda a: (row[a][0], a))
    fallback = best_quantizer(source.invariant, dist, space)
    return Policy(table.n, space.M, fallback, dict(sorted(action_map.items())))
