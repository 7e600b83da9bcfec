import math

import numpy as np
import pytest

from zdc.belief import squared_error
from zdc.errors import NonPositiveInput, PolicyConfigMismatch, ZeroMassBin
from zdc.evaluation import (
    LOSSLESS,
    discounted_cost_estimate,
    discounted_cost_samples,
    evaluate_policy,
    filter_stability_diagnostic,
    make_report,
    snr_db,
    truncation_horizon,
)
from zdc.qlearning import Policy, TrainConfig, extract_policy, train
from zdc.quantizers import QuantizerSpace
from zdc.source import iid_source, new_finite_source


def constant_policy(Q, n=1, M=None):
    Q = tuple(Q)
    return Policy(n, M or max(Q) + 1, Q, {})


def test_snr_values():
    assert snr_db(1, 0.1) == pytest.approx(10.0)
    assert snr_db(1, 1) == 0.0
    assert snr_db(2, 0.5) == pytest.approx(6.0206, abs=1e-4)
    with pytest.raises(NonPositiveInput):
        snr_db(1, 0)


def test_lossless_identity(eight, eight_dist):
    report = evaluate_policy(eight, constant_policy(range(8)), eight_dist, 2000, 0)
    assert report.avg_distortion == 0.0
    assert math.isinf(report.snr_db)
    assert report.to_dict()["snr_db"] == LOSSLESS
    assert report.rate_bits == 3.0


def test_report_fields(eight, eight_dist):
    report = evaluate_policy(eight, constant_policy([0, 0, 0, 0, 1, 1, 1, 1]), eight_dist, 5000, 1)
    assert report.T == 5000 and report.seed == 1 and report.rate_bits == 1.0
    assert report.var_x == pytest.approx(eight.variance)
    assert report.snr_db == pytest.approx(10 * math.log10(report.var_x / report.avg_distortion))


def test_policy_n_guard(eight, eight_dist):
    with pytest.raises(PolicyConfigMismatch):
        evaluate_policy(eight, constant_policy(range(8), n=5), eight_dist, 10, 0, n=1)


def test_encoder_decoder_stay_synchronized(eight, eight_dist):
    space = QuantizerSpace(8, 3)
    cfg = TrainConfig(n=3, beta=0.95, max_steps=20000, seed=0)
    policy = extract_policy(train(eight, eight_dist, space, cfg)[0], cfg, space, eight, eight_dist)
    a = evaluate_policy(eight, policy, eight_dist, 20000, 3, check_sync=True)
    b = evaluate_policy(eight, policy, eight_dist, 20000, 3)
    assert a == b


def test_channel_relabeling_invariance(eight, eight_dist):
    space = QuantizerSpace(8, 3)
    cfg = TrainConfig(n=2, beta=0.95, max_steps=20000, seed=1)
    policy = extract_policy(train(eight, eight_dist, space, cfg)[0], cfg, space, eight, eight_dist)
    perm = np.array([2, 0, 1])
    relabeled = Policy(policy.n, policy.M, tuple(perm[list(policy.fallback)]),
                       {s: tuple(perm[list(a)]) for s, a in policy.action_map.items()})
    a = evaluate_policy(eight, policy, eight_dist, 20000, 5)
    b = evaluate_policy(eight, relabeled, eight_dist, 20000, 5)
    assert a.snr_db == b.snr_db


def test_truncation_horizon():
    H = truncation_horizon(0.9999, 1.0)
    assert 2.0e5 < H < 2.4e5
    assert 0.9999**H / (1 - 0.9999) < 1e-6


def test_discounted_lossless_is_zero(eight, eight_dist):
    assert discounted_cost_estimate(eight, constant_policy(range(8)), eight_dist, 0.9, 100, 3, 0) == 0.0


def test_discounted_constant_distortion_geometric_series():
    # one bin and a uniform belief: the decoder ties and always answers -1,
    # so each step costs 0 or 4 with mean 2
    source = new_finite_source([[0.5, 0.5], [0.5, 0.5]], [-1.0, 1.0])
    dist = squared_error(source.values)
    beta, horizon, runs = 0.9, 200, 400
    samples = discounted_cost_samples(source, constant_policy([0, 0]), dist, beta, horizon, runs, 7)
    expected = 2.0 * (1 - beta**horizon) / (1 - beta)
    assert abs(samples.mean() - expected) < 3 * samples.std(ddof=1) / np.sqrt(runs) + 1e-6


def test_discounted_deterministic_constant_cost():
    # both symbols sit at distance 1 from the only reproduction point
    source = iid_source([0.5, 0.5], [-1.0, 1.0])
    dist = squared_error(source.values, [0.0])
    beta = 0.95
    value = discounted_cost_estimate(source, constant_policy([0, 0]), dist, beta, 400, 2, 0)
    assert value == pytest.approx((1 - beta**400) / (1 - beta), rel=1e-12)


def test_filter_stability_equal_priors(eight):
    z = eight.invariant
    trace = filter_stability_diagnostic(eight, z, z, 500, 0)
    assert np.all(trace == 0)


def test_filter_stability_iid_forgets_in_one_step():
    src = iid_source([0.1, 0.2, 0.3, 0.4])
    trace = filter_stability_diagnostic(src, src.invariant, [0.25] * 4, 200, 0)
    assert trace[0] > 0
    assert np.all(trace[1:] < 1e-14)


def test_filter_stability_mismatched_support(eight):
    prior_b = np.zeros(8)
    prior_b[0] = 1.0
    with pytest.raises(ZeroMassBin) as info:
        filter_stability_diagnostic(eight, eight.invariant, prior_b, 1000, 0, M=8)
    assert info.value.step is not None


def test_seed_variation_small(eight, eight_dist):
    policy = constant_policy([0, 0, 0, 0, 1, 1, 1, 1])
    d = [evaluate_policy(eight, policy, eight_dist, 10**5, s).avg_distortion for s in range(3)]
    assert (max(d) - min(d)) / np.mean(d) < 0.02


def test_make_report_lossless(eight):
    assert math.isinf(make_report(eight, np.zeros(5), 2, 0).snr_db)
