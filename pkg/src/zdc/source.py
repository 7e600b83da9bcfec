"""Finite-alphabet Markov sources: construction, validation, sampling."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from math import gcd

import numpy as np
from scipy.special import ndtr

from .errors import (
    ConfigParse,
    InvalidCorrelation,
    NoConvergence,
    NonStochasticRow,
    Periodic,
    Reducible,
)

ROW_TOL = 1e-12
POWER_TOL = 1e-12
POWER_MAX_ITER = 10**6

# 8-state source used in the finite-alphabet experiments. Entries are printed
# to four decimals, so rows sum to ~0.9996 and are renormalized on load.
EIGHT_STATE_MATRIX = (
    (0.1331, 0.0824, 0.0311, 0.2131, 0.2623, 0.0714, 0.0417, 0.1645),
    (0.1207, 0.1501, 0.1268, 0.1974, 0.0952, 0.0862, 0.1870, 0.0362),
    (0.2320, 0.0491, 0.1770, 0.1476, 0.1530, 0.1691, 0.0215, 0.05043),
    (0.0162, 0.1930, 0.2511, 0.1935, 0.0688, 0.1280, 0.0893, 0.0597),
    (0.0420, 0.1496, 0.1130, 0.0478, 0.1073, 0.2345, 0.0692, 0.2363),
    (0.1382, 0.1720, 0.1378, 0.1369, 0.0396, 0.1923, 0.1383, 0.0445),
    (0.1710, 0.2153, 0.1579, 0.0366, 0.1530, 0.1144, 0.0439, 0.1075),
    (0.1292, 0.0534, 0.1309, 0.0315, 0.2837, 0.2617, 0.0103, 0.0988),
)
EIGHT_STATE_INVARIANT = (0.1211, 0.1326, 0.1416, 0.1328, 0.1360, 0.1580, 0.0806, 0.0973)


@dataclass(frozen=True, eq=False)
class FiniteSource:
    """A validated, immutable finite-alphabet Markov source.

    Symbols are the integers ``0..m-1``; ``values[x]`` is the real number
    symbol ``x`` stands for when distortion is measured.
    """

    P: np.ndarray
    values: np.ndarray
    initial: np.ndarray

    @property
    def m(self) -> int:
        return self.P.shape[0]

    @cached_property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.P, axis=1)

    @cached_property
    def invariant(self) -> np.ndarray:
        return invariant_distribution(self)

    @cached_property
    def variance(self) -> float:
        """Variance of the symbol values under the invariant distribution."""
        z = self.invariant
        mean = float(z @ self.values)
        return float(z @ (self.values - mean) ** 2)

    def __eq__(self, other):
        if not isinstance(other, FiniteSource):
            return NotImplemented
        return (
            np.array_equal(self.P, other.P)
            and np.array_equal(self.values, other.values)
            and np.array_equal(self.initial, other.initial)
        )

    __hash__ = None


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _positive_graph(P):
    return [np.flatnonzero(row > 0) for row in P]


def _reachable(adj, start=0):
    seen = np.zeros(len(adj), dtype=bool)
    seen[start] = True
    stack = [start]
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if not seen[v]:
                seen[v] = True
                stack.append(v)
    return seen


def chain_period(P) -> int:
    """Period of an irreducible chain via BFS levels from state 0.

    The period is the gcd of ``level[u] + 1 - level[v]`` over all edges u -> v.
    """
    adj = _positive_graph(np.asarray(P))
    level = np.full(len(adj), -1)
    level[0] = 0
    queue = [0]
    for u in queue:
        for v in adj[u]:
            if level[v] < 0:
                level[v] = level[u] + 1
                queue.append(v)
    g = 0
    for u, nbrs in enumerate(adj):
        for v in nbrs:
            g = gcd(g, int(abs(level[u] + 1 - level[v])))
    return g


def validate_transition_matrix(P) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] == 0:
        raise NonStochasticRow(f"transition matrix must be square, got shape {P.shape}")
    if np.any(P < 0) or not np.all(np.isfinite(P)):
        raise NonStochasticRow("transition matrix has negative or non-finite entries")
    bad = np.flatnonzero(np.abs(P.sum(axis=1) - 1.0) > ROW_TOL)
    if bad.size:
        raise NonStochasticRow(f"rows {bad.tolist()} do not sum to 1")
    adj = _positive_graph(P)
    rev = _positive_graph(P.T)
    if not (_reachable(adj).all() and _reachable(rev).all()):
        raise Reducible("transition matrix is not irreducible")
    period = chain_period(P)
    if period != 1:
        raise Periodic(f"chain has period {period}")
    return P


def new_finite_source(P, values=None, initial=None) -> FiniteSource:
    """Build a validated source.

    ``values`` defaults to ``1..m``. ``initial`` defaults to the invariant
    distribution.
    """
    P = validate_transition_matrix(P)
    m = P.shape[0]
    values = np.arange(1, m + 1, dtype=float) if values is None else np.asarray(values, float)
    if values.shape != (m,):
        raise ConfigParse(f"expected {m} alphabet values, got {values.shape}")
    if initial is None:
        initial = invariant_distribution(P)
    initial = np.asarray(initial, dtype=float)
    if initial.shape != (m,) or np.any(initial < 0) or abs(initial.sum() - 1) > 1e-9:
        raise ConfigParse("initial distribution must be a probability vector of length m")
    return FiniteSource(_frozen(P), _frozen(values), _frozen(initial))


def eight_state_source(initial=None) -> FiniteSource:
    """The 8-state source with alphabet values 1..8 (rows renormalized)."""
    P = np.array(EIGHT_STATE_MATRIX)
    P /= P.sum(axis=1, keepdims=True)
    return new_finite_source(P, np.arange(1, 9), initial)


def iid_source(probs, values=None) -> FiniteSource:
    """Memoryless source: every row of the transition matrix equals ``probs``."""
    probs = np.asarray(probs, dtype=float)
    probs = probs / probs.sum()
    return new_finite_source(np.tile(probs, (len(probs), 1)), values, probs)


def invariant_distribution(source) -> np.ndarray:
    """Invariant distribution by power iteration from the uniform vector."""
    P = source.P if isinstance(source, FiniteSource) else np.asarray(source, float)
    z = np.full(P.shape[0], 1.0 / P.shape[0])
    for _ in range(POWER_MAX_ITER):
        nxt = z @ P
        nxt /= nxt.sum()
        if np.abs(nxt - z).sum() < POWER_TOL:
            return nxt
        z = nxt
    raise NoConvergence(f"power iteration did not converge in {POWER_MAX_ITER} iterations")


def _draw(cum, u):
    i = int(np.searchsorted(cum, u, side="right"))
    return i if i < len(cum) else len(cum) - 1


def sample_path(source: FiniteSource, T: int, seed=None, initial=None) -> np.ndarray:
    """Sample ``X_0..X_{T-1}``; ``X_0`` is drawn from ``initial`` (default: the
    source's initial distribution). ``seed`` may be an int or a Generator."""
    if T < 1:
        raise ValueError("T must be >= 1")
    rng = np.random.default_rng(seed)
    init = source.initial if initial is None else np.asarray(initial, float)
    u = rng.random(T)
    cum = source.cumulative
    out = np.empty(T, dtype=np.int64)
    x = _draw(np.cumsum(init), u[0])
    out[0] = x
    for t in range(1, T):
        x = _draw(cum[x], u[t])
        out[t] = x
    return out


def _cell_probs(edges, mean, sd):
    """Gaussian mass in each cell; the outer cells absorb both tails."""
    z = (edges - mean) / sd
    lower = ndtr(z)
    upper = ndtr(-z)
    # difference the smaller tail for accuracy far from the mean
    p = np.where(z[1:] <= 0, lower[1:] - lower[:-1], upper[:-1] - upper[1:])
    return np.clip(p, 0.0, None)


def gaussian_grid_probs(grid_min, grid_step, grid_count, mean=0.0, sd=1.0):
    values = grid_min + grid_step * np.arange(grid_count)
    edges = np.concatenate(([-np.inf], values[:-1] + grid_step / 2, [np.inf]))
    p = _cell_probs(edges, mean, sd)
    return values, p / p.sum()


def discretize_gauss_markov(rho, grid_min=-6.0, grid_step=0.05, grid_count=241) -> FiniteSource:
    """Discretize ``X' = rho X + sqrt(1 - rho^2) W`` onto a uniform grid.

    Row ``x`` integrates N(rho * v_x, 1 - rho^2) over the cells around each grid
    value; cell boundaries are midpoints and the outer cells extend to
    infinity. The stationary marginal of the continuous process is N(0, 1).
    """
    if not (-1 < rho < 1):
        raise InvalidCorrelation(f"|rho| must be < 1, got {rho}")
    if grid_count < 2:
        raise ConfigParse("grid_count must be >= 2")
    values, init = gaussian_grid_probs(grid_min, grid_step, grid_count)
    edges = np.concatenate(([-np.inf], values[:-1] + grid_step / 2, [np.inf]))
    sd = np.sqrt(1.0 - rho * rho)
    P = np.array([_cell_probs(edges, rho * v, sd) for v in values])
    P /= P.sum(axis=1, keepdims=True)
    return new_finite_source(P, values, init)


def source_from_spec(doc: dict) -> FiniteSource:
    """Build a source from its JSON description.

    Accepted forms::

        {"matrix": [[...]], "values": [...], "initial": [...]}
        {"gauss_markov": {"rho": 0.9, "grid_min": -6, "grid_step": 0.05, "grid_count": 241}}
        {"iid_gaussian": {"grid_min": -6, "grid_step": 0.05, "grid_count": 241}}
        {"builtin": "eight_state"}
    """
    if not isinstance(doc, dict):
        raise ConfigParse("source spec must be a JSON object")
    if "matrix" in doc:
        P = np.asarray(doc["matrix"], dtype=float)
        if doc.get("normalize", False):
            P = P / P.sum(axis=1, keepdims=True)
        return new_finite_source(P, doc.get("values"), doc.get("initial"))
    if "gauss_markov" in doc:
        g = doc["gauss_markov"]
        return discretize_gauss_markov(
            g["rho"], g.get("grid_min", -6.0), g.get("grid_step", 0.05), g.get("grid_count", 241)
        )
    if "iid_gaussian" in doc:
        g = doc["iid_gaussian"]
        return discretize_gauss_markov(
            0.0, g.get("grid_min", -6.0), g.get("grid_step", 0.05), g.get("grid_count", 241)
        )
    if doc.get("builtin") == "eight_state":
        return eight_state_source()
    raise ConfigParse(f"unrecognized source spec keys: {sorted(doc)}")


def source_to_spec(source: FiniteSource) -> dict:
    return {
        "matrix": source.P.tolist(),
        "values": source.values.tolist(),
        "initial": source.initial.tolist(),
    }
