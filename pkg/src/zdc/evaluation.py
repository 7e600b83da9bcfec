"""Closed-loop replay of encoder policies and performance measures."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .belief import MASS_TOL, DistortionSpec, tv_distance
from .errors import NonPositiveInput, PolicyConfigMismatch, ZeroMassBin
from .qlearning import Policy
from .quantizers import QuantizerSpace, sample_batch
from .simplex import quantize_counts
from .source import FiniteSource, sample_path

LOSSLESS = "lossless"
TRUNCATION_ERROR = 1e-6


@dataclass(frozen=True)
class RunReport:
    T: int
    avg_distortion: float
    snr_db: float
    rate_bits: float
    var_x: float
    seed: int | None

    def to_dict(self) -> dict:
        out = asdict(self)
        if math.isinf(self.snr_db):
            out["snr_db"] = LOSSLESS
        return out


def snr_db(variance: float, distortion: float) -> float:
    if variance <= 0 or distortion <= 0:
        raise NonPositiveInput(f"variance and distortion must be positive: {variance}, {distortion}")
    return 10.0 * math.log10(variance / distortion)


def make_report(source: FiniteSource, distortions, M: int, seed) -> RunReport:
    D = float(np.mean(distortions))
    snr = math.inf if D == 0 else snr_db(source.variance, D)
    return RunReport(len(distortions), D, snr, math.log2(M), source.variance, seed)


def run_codec(source: FiniteSource, policy: Policy, dist: DistortionSpec, path, pi0,
              check_sync: bool = False) -> np.ndarray:
    """Encode and decode ``path``; returns the per-step distortion.

    Encoder and decoder each run the predictor recursion on what they
    observe; with ``check_sync`` they are kept as separate states and
    compared after every step.
    """
    P = np.asarray(source.P)
    D = dist.matrix
    n = policy.n
    actions = {s: np.asarray(a) for s, a in policy.action_map.items()}
    fallback = np.asarray(policy.fallback)
    pi = np.asarray(pi0, dtype=float)
    pi_dec = pi.copy()
    out = np.empty(len(path))
    for t, x in enumerate(path):
        a = actions.get(tuple(quantize_counts(pi, n).tolist()), fallback)
        q = a[x]
        # decoder: condition on the channel symbol, reconstruct
        w = np.where(a == q, pi_dec, 0.0)
        mass = w.sum()
        if mass <= MASS_TOL:
            raise ZeroMassBin(f"channel symbol {q} has belief mass {mass:.3g}", step=t)
        out[t] = D[x, np.argmin(w @ D)]
        nxt = w @ P
        pi_dec = nxt / nxt.sum()
        if check_sync:
            we = np.where(a == q, pi, 0.0)
            nxt_e = we @ P
            pi = nxt_e / nxt_e.sum()
            if not np.array_equal(pi, pi_dec):
                raise AssertionError(f"encoder and decoder beliefs diverged at step {t}")
        else:
            pi = pi_dec
    return out


def evaluate_policy(source: FiniteSource, policy: Policy, dist: DistortionSpec, T: int, seed=None,
                    n: int | None = None, initial=None, check_sync: bool = False) -> RunReport:
    """Average distortion and SNR of ``policy`` over ``T`` samples.

    By default the source and both beliefs start from the invariant
    distribution. The source path depends only on ``(source, T, seed)``, so
    other methods evaluated with the same seed see the same samples.
    """
    if n is not None and n != policy.n:
        raise PolicyConfigMismatch(f"policy was built for n={policy.n}, evaluation requested n={n}")
    pi0 = source.invariant if initial is None else np.asarray(initial, float)
    path = sample_path(source, T, seed, initial=pi0)
    d = run_codec(source, policy, dist, path, pi0, check_sync)
    return make_report(source, d, policy.M, seed)


def truncation_horizon(beta: float, max_cost: float, error: float = TRUNCATION_ERROR) -> int:
    """Smallest horizon H with ``beta**H * max_cost / (1 - beta) < error``."""
    if max_cost <= 0:
        return 1
    return max(1, math.ceil(math.log(error * (1 - beta) / max_cost) / math.log(beta)))


def discounted_cost_samples(source, policy, dist, beta, horizon=None, num_runs=10, seed=None,
                            n=None) -> np.ndarray:
    """Discounted distortion of each of ``num_runs`` independent runs from the
    invariant distribution."""
    if not 0 < beta < 1:
        raise ValueError("beta must lie in (0, 1)")
    if n is not None and n != policy.n:
        raise PolicyConfigMismatch(f"policy was built for n={policy.n}, evaluation requested n={n}")
    if horizon is None:
        horizon = truncation_horizon(beta, dist.max_cost)
    rng = np.random.default_rng(seed)
    weights = beta ** np.arange(horizon)
    pi0 = source.invariant
    out = np.empty(num_runs)
    for r in range(num_runs):
        path = sample_path(source, horizon, rng, initial=pi0)
        out[r] = weights @ run_codec(source, policy, dist, path, pi0)
    return out


def discounted_cost_estimate(source, policy, dist, beta, horizon=None, num_runs=10, seed=None,
                             n=None) -> float:
    return float(discounted_cost_samples(source, policy, dist, beta, horizon, num_runs, seed, n).mean())


def filter_stability_diagnostic(source: FiniteSource, prior_a, prior_b, T: int, seed=None,
                                M: int = 2) -> np.ndarray:
    """TV distance between two predictors started at different priors.

    The source starts from ``prior_a``; both predictors are driven by the same
    uniformly explored quantizers and channel symbols. Entry ``t`` is the
    distance after ``t`` updates (entry 0 compares the priors themselves).
    """
    rng = np.random.default_rng(seed)
    P = np.asarray(source.P)
    a_pi = np.asarray(prior_a, dtype=float)
    b_pi = np.asarray(prior_b, dtype=float)
    path = sample_path(source, T, rng, initial=a_pi)
    actions = sample_batch(QuantizerSpace(source.m, M), rng, T)
    trace = np.empty(T + 1)
    trace[0] = tv_distance(a_pi, b_pi)
    for t in range(T):
        a = actions[t]
        mask = a == a[path[t]]
        wa = np.where(mask, a_pi, 0.0)
        wb = np.where(mask, b_pi, 0.0)
        if wb.sum() <= MASS_TOL:
            raise ZeroMassBin("second prior gives the realized channel symbol no mass", step=t)
        if wa.sum() <= MASS_TOL:
            raise ZeroMassBin("first prior gives the realized channel symbol no mass", step=t)
        a_pi = wa @ P
        a_pi /= a_pi.sum()
        b_pi = wb @ P
        b_pi /= b_pi.sum()
        trace[t + 1] = np.abs(a_pi - b_pi).sum()
    return trace
