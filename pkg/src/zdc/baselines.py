"""Lloyd-Max scalar quantizers and the omniscient finite-state scalar
quantizer (O-FSSQ) used as comparison methods."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .belief import DistortionSpec
from .errors import InsufficientSupport
from .evaluation import RunReport, make_report
from .source import FiniteSource, sample_path

log = logging.getLogger(__name__)

MAX_ITER = 1000
REL_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class ScalarQuantizer:
    """Nearest-neighbor scalar quantizer with a sorted codebook."""

    codebook: np.ndarray
    history: tuple = field(default=(), repr=False)

    @property
    def thresholds(self) -> np.ndarray:
        return (self.codebook[1:] + self.codebook[:-1]) / 2

    @property
    def levels(self) -> int:
        return len(self.codebook)

    def encode(self, x) -> np.ndarray:
        """Cell index of each value; values on a threshold go to the lower cell."""
        return np.searchsorted(self.thresholds, x, side="left")

    def decode(self, idx) -> np.ndarray:
        return self.codebook[idx]

    def __call__(self, x):
        return self.decode(self.encode(x))

    def __eq__(self, other):
        if not isinstance(other, ScalarQuantizer):
            return NotImplemented
        return np.array_equal(self.codebook, other.codebook)

    __hash__ = None


def _support(samples, values, weights):
    if samples is not None:
        v, counts = np.unique(np.asarray(samples, dtype=float), return_counts=True)
        return v, counts.astype(float)
    v = np.asarray(values, dtype=float)
    w = np.asarray(weights, dtype=float)
    order = np.argsort(v, kind="stable")
    v, w = v[order], w[order]
    keep = w > 0
    return v[keep], w[keep]


def _snap(points, alphabet):
    if alphabet is None:
        return points
    idx = np.clip(np.searchsorted(alphabet, points), 1, len(alphabet) - 1)
    left, right = alphabet[idx - 1], alphabet[idx]
    return np.where(points - left <= right - points, left, right)


def _weighted_quantile(v, w, qs):
    cdf = np.cumsum(w) / w.sum()
    return v[np.minimum(np.searchsorted(cdf, qs), len(v) - 1)]


def _split_target(v, w, cell, codebook):
    """A point inside the most populous splittable cell, away from its code."""
    masses = np.bincount(cell, weights=w, minlength=len(codebook))
    for j in np.argsort(-masses, kind="stable"):
        sel = cell == j
        vals, ws = v[sel], w[sel]
        upper = vals > codebook[j]
        lower = vals < codebook[j]
        side = upper if ws[upper].sum() >= ws[lower].sum() else lower
        if side.any():
            return float(np.average(vals[side], weights=ws[side]))
    return None


def lloyd_max(samples=None, M: int = 2, *, values=None, weights=None, reproduction_alphabet=None,
              max_iter: int = MAX_ITER, rel_tol: float = REL_TOL) -> ScalarQuantizer:
    """Design an ``M``-level squared-error scalar quantizer by Lloyd iterations.

    Pass either ``samples`` or an explicit discrete distribution
    (``values``, ``weights``). With a finite ``reproduction_alphabet`` every
    centroid is moved to its nearest alphabet member, which is the best
    constrained reconstruction for squared error, so training distortion never
    increases. The codebook is initialized at uniform quantiles; a cell left
    empty is re-seeded inside the most populous cell.
    """
    v, w = _support(samples, values, weights)
    if len(v) < M:
        raise InsufficientSupport(f"{len(v)} distinct values cannot support {M} levels")
    alphabet = None if reproduction_alphabet is None else np.sort(np.asarray(reproduction_alphabet, float))
    codebook = np.sort(_snap(_weighted_quantile(v, w, (np.arange(M) + 0.5) / M), alphabet))
    total = w.sum()
    history = []
    prev = math.inf
    for _ in range(max_iter):
        cell = ScalarQuantizer(codebook).encode(v)
        err = float(w @ (v - codebook[cell]) ** 2) / total
        history.append(err)
        if prev < math.inf and (prev - err <= rel_tol * prev or err == 0.0):
            break
        prev = err
        mass = np.bincount(cell, weights=w, minlength=M)
        sums = np.bincount(cell, weights=w * v, minlength=M)
        new = codebook.copy()
        full = mass > 0
        new[full] = _snap(sums[full] / mass[full], alphabet)
        # re-seed empty cells and duplicate codes
        _, first = np.unique(new, return_index=True)
        dead = np.setdiff1d(np.arange(M), first)
        dead = np.union1d(dead, np.flatnonzero(~full))
        for j in dead:
            target = _split_target(v, w, cell, codebook)
            if target is None:
                break
            cand = _snap(np.array([target]), alphabet)[0]
            if alphabet is not None and np.any(new == cand):
                free = np.setdiff1d(alphabet, new)
                if free.size == 0:
                    break
                cand = free[np.argmin(np.abs(free - target))]
            new[j] = cand
        codebook = np.sort(new)
    return ScalarQuantizer(codebook, tuple(history))


def training_distortion(sq: ScalarQuantizer, samples=None, *, values=None, weights=None) -> float:
    v, w = _support(samples, values, weights)
    return float(w @ (v - sq(v)) ** 2 / w.sum())


@dataclass(frozen=True, eq=False)
class OFSSQCodebooks:
    """State classifier ``V`` plus one scalar quantizer per state."""

    classifier: ScalarQuantizer
    per_state: tuple

    @property
    def K(self) -> int:
        return self.classifier.levels

    @property
    def M(self) -> int:
        return self.per_state[0].levels

    def __eq__(self, other):
        if not isinstance(other, OFSSQCodebooks):
            return NotImplemented
        return self.classifier == other.classifier and all(
            a == b for a, b in zip(self.per_state, other.per_state)
        ) and len(self.per_state) == len(other.per_state)

    __hash__ = None


def train_ofssq(training, K: int, M: int, dist: DistortionSpec,
                classifier_mode: str = "identity") -> OFSSQCodebooks:
    """Train per-state Lloyd-Max codebooks.

    ``training`` holds real source values. Sample ``x_t`` is filed under the
    state ``V(x_{t-1})`` of the true previous value. ``identity`` uses the
    reproduction alphabet itself as the classifier (requires ``K`` equal to its
    size); ``lloyd_max`` designs a ``K``-level classifier from the data.
    Buckets that cannot support ``M`` levels fall back to the codebook trained
    on all data.
    """
    x = np.asarray(training, dtype=float)
    alphabet = np.sort(dist.reproduction)
    if K == 1:
        return OFSSQCodebooks(ScalarQuantizer(np.array([x.mean()])),
                              (lloyd_max(x, M, reproduction_alphabet=alphabet),))
    if classifier_mode == "identity":
        if K != len(alphabet):
            raise ValueError(f"identity classifier needs K = |reproduction alphabet| = {len(alphabet)}")
        classifier = ScalarQuantizer(alphabet)
    elif classifier_mode == "lloyd_max":
        classifier = lloyd_max(x, K)
    else:
        raise ValueError(f"unknown classifier mode {classifier_mode!r}")
    states = classifier.encode(x[:-1])
    nxt = x[1:]
    global_cb = None
    per_state = []
    for k in range(K):
        bucket = nxt[states == k]
        if len(np.unique(bucket)) >= M:
            per_state.append(lloyd_max(bucket, M, reproduction_alphabet=alphabet))
            continue
        log.warning("state %d has %d training samples; using the global codebook", k, len(bucket))
        if global_cb is None:
            global_cb = lloyd_max(x, M, reproduction_alphabet=alphabet)
        per_state.append(global_cb)
    return OFSSQCodebooks(classifier, tuple(per_state))


def ofssq_distortions(codebooks: OFSSQCodebooks, source: FiniteSource, dist: DistortionSpec,
                      path) -> np.ndarray:
    """Per-step distortion of the O-FSSQ in closed loop on ``path``.

    The state for ``X_t`` is ``V(Xhat_{t-1})``, which the decoder knows; the
    initial state is the class of the alphabet value nearest the stationary
    mean.
    """
    values = source.values
    K = len(codebooks.per_state)
    # per state: reconstruction of each source symbol and the resulting next state
    recon = np.array([sq(values) for sq in codebooks.per_state])
    next_state = codebooks.classifier.encode(recon.ravel()).reshape(recon.shape)
    if K == 1:
        next_state[:] = 0
    mean = float(source.invariant @ values)
    start = dist.reproduction[np.argmin(np.abs(dist.reproduction - mean))]
    s = int(codebooks.classifier.encode(start)) if K > 1 else 0
    recon_l = recon.tolist()
    next_l = next_state.tolist()
    xhat = np.empty(len(path))
    for t, x in enumerate(path.tolist()):
        xhat[t] = recon_l[s][x]
        s = next_l[s][x]
    return np.asarray(dist.d(values[path], xhat), dtype=float)


def ofssq_run(codebooks: OFSSQCodebooks, source: FiniteSource, T: int, seed=None,
              dist: DistortionSpec | None = None) -> RunReport:
    """Evaluate O-FSSQ over ``T`` samples started from the invariant distribution."""
    from .belief import squared_error

    dist = dist or squared_error(source.values)
    path = sample_path(source, T, seed, initial=source.invariant)
    return make_report(source, ofssq_distortions(codebooks, source, dist, path), codebooks.M, seed)


def scalar_run(sq: ScalarQuantizer, source: FiniteSource, T: int, seed=None,
               dist: DistortionSpec | None = None) -> RunReport:
    """Evaluate a single memoryless scalar quantizer (a one-state O-FSSQ)."""
    cb = OFSSQCodebooks(ScalarQuantizer(np.array([0.0])), (sq,))
    return ofssq_run(cb, source, T, seed, dist)
