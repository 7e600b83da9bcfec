"""Predictor/filter recursions, per-stage cost and the optimal decoder.

Beliefs are 1-D float arrays over source symbols ``0..m-1``. A quantizer is
an integer array ``Q`` of length ``m`` with ``Q[x]`` the channel symbol
(``0..M-1``) assigned to source symbol ``x``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DimensionMismatch, ZeroMassBin

MASS_TOL = 1e-12


def _squared(x, y):
    return (x - y) ** 2


@dataclass(frozen=True, eq=False)
class DistortionSpec:
    """Distortion ``d(x, xhat)`` between source values and a finite
    reproduction alphabet.

    ``matrix[i, j] = d(source_values[i], reproduction[j])`` is precomputed; all
    belief-level computations go through it.
    """

    source_values: np.ndarray
    reproduction: np.ndarray
    d: Callable = _squared
    matrix: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        xs = np.asarray(self.source_values, dtype=float)
        ys = np.asarray(self.reproduction, dtype=float)
        try:
            D = np.asarray(self.d(xs[:, None], ys[None, :]), dtype=float)
        except (TypeError, ValueError):
            D = None
        if D is None or D.shape != (xs.size, ys.size):
            D = np.array([[self.d(x, y) for y in ys] for x in xs], dtype=float)
        if np.any(D < 0) or not np.all(np.isfinite(D)):
            raise ValueError("distortion must be finite and nonnegative")
        for name, val in (("source_values", xs), ("reproduction", ys), ("matrix", D)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def max_cost(self) -> float:
        """Sup-norm of the stage cost, ``max d(x, xhat)``."""
        return float(self.matrix.max())

    def scaled(self, factor: float) -> "DistortionSpec":
        d = self.d
        return DistortionSpec(self.source_values, self.reproduction, lambda x, y: factor * d(x, y))


def squared_error(source_values, reproduction=None) -> DistortionSpec:
    """Squared-error distortion; the reproduction alphabet defaults to the source values."""
    if reproduction is None:
        reproduction = source_values
    return DistortionSpec(np.asarray(source_values, float), np.asarray(reproduction, float))


def _transition(source):
    return getattr(source, "P", source)


def bin_mass(pi, Q, q) -> tuple[np.ndarray, float]:
    w = np.where(np.asarray(Q) == q, pi, 0.0)
    return w, float(w.sum())


def filter_from_predictor(pi, Q, q) -> np.ndarray:
    """Condition the predictor on the event ``Q(X) = q``."""
    w, mass = bin_mass(pi, Q, q)
    if mass <= MASS_TOL:
        raise ZeroMassBin(f"channel symbol {q} has belief mass {mass:.3g}")
    return w / mass


def predictor_update(pi, Q, q, source) -> np.ndarray:
    """One step of the predictor recursion.

    ``pi'(x') = sum_{x: Q(x)=q} P(x'|x) pi(x) / pi(Q^{-1}(q))``, renormalized so
    the output sums to exactly one in floating point.
    """
    w, mass = bin_mass(pi, Q, q)
    if mass <= MASS_TOL:
        raise ZeroMassBin(f"channel symbol {q} has belief mass {mass:.3g}")
    nxt = w @ _transition(source)
    return nxt / nxt.sum()


def bin_costs(pi, Q, dist: DistortionSpec) -> np.ndarray:
    """Per-bin, per-reconstruction weighted distortion, shape ``(M, |Xhat|)``."""
    Q = np.asarray(Q)
    M = int(Q.max()) + 1
    onehot = Q[None, :] == np.arange(M)[:, None]
    return (onehot * pi) @ dist.matrix


def stage_cost(pi, Q, dist: DistortionSpec) -> float:
    """Expected distortion of quantizer ``Q`` at predictor ``pi`` with the
    optimal decoder; empty bins contribute zero."""
    return float(bin_costs(pi, Q, dist).min(axis=1).sum())


def stage_costs_many(pi, quantizers, dist: DistortionSpec) -> np.ndarray:
    """Vectorized ``stage_cost`` over a ``(K, m)`` stack of quantizers."""
    Qs = np.asarray(quantizers)
    M = int(Qs.max()) + 1
    weighted = pi[:, None] * dist.matrix
    out = np.zeros(len(Qs))
    for i in range(M):
        out += ((Qs == i).astype(float) @ weighted).min(axis=1)
    return out


def reconstruction_index(pi_bar, dist: DistortionSpec) -> int:
    """Index into the reproduction alphabet of the optimal decoder output.

    ``np.argmin`` returns the first minimizer, so ties go to the lowest index.
    """
    return int(np.argmin(pi_bar @ dist.matrix))


def optimal_reconstruction(pi_bar, dist: DistortionSpec) -> float:
    return float(dist.reproduction[reconstruction_index(pi_bar, dist)])


def tv_distance(a, b) -> float:
    """Total variation distance in the ``sum |a_i - b_i|`` normalization (range [0, 2])."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionMismatch(f"{a.shape} vs {b.shape}")
    return float(np.abs(a - b).sum())
