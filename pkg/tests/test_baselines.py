import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import norm

from zdc.baselines import (
    OFSSQCodebooks,
    ScalarQuantizer,
    lloyd_max,
    ofssq_distortions,
    ofssq_run,
    scalar_run,
    train_ofssq,
    training_distortion,
)
from zdc.belief import squared_error
from zdc.errors import InsufficientSupport
from zdc.source import iid_source, new_finite_source, sample_path


def test_encode_ties_go_low():
    sq = ScalarQuantizer(np.array([0.0, 2.0, 4.0]))
    assert sq.encode([1.0, 3.0, -5, 5]).tolist() == [0, 1, 0, 2]
    assert sq([0.9, 1.1]).tolist() == [0.0, 2.0]


def test_lloyd_gaussian_two_level():
    # two-level optimum for a unit Gaussian is +-sqrt(2/pi)
    x = np.random.default_rng(0).standard_normal(200_000)
    sq = lloyd_max(x, 2)
    assert sq.codebook == pytest.approx([-np.sqrt(2 / np.pi), np.sqrt(2 / np.pi)], abs=0.01)
    assert training_distortion(sq, x) == pytest.approx(1 - 2 / np.pi, abs=0.01)


def test_lloyd_gaussian_four_level_table():
    # classical optimum-quantizer table for a unit Gaussian at 4 levels
    grid = np.linspace(-6, 6, 4801)
    w = norm.pdf(grid)
    sq = lloyd_max(M=4, values=grid, weights=w, rel_tol=1e-13)
    assert sq.codebook == pytest.approx([-1.510, -0.4528, 0.4528, 1.510], abs=2e-3)
    assert training_distortion(sq, values=grid, weights=w) == pytest.approx(0.1175, abs=1e-3)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 6))
def test_lloyd_descent(seed, M):
    rng = np.random.default_rng(seed)
    x = rng.choice(np.arange(12.0), size=400) + rng.integers(0, 2, size=400) * 20
    if len(np.unique(x)) < M:
        return
    sq = lloyd_max(x, M, reproduction_alphabet=np.arange(40.0))
    h = np.array(sq.history)
    assert np.all(np.diff(h) <= 1e-12 * h[:-1] + 1e-15)
    assert set(sq.codebook) <= set(np.arange(40.0))
    assert len(np.unique(sq.codebook)) == M


def test_lloyd_alphabet_snapping():
    x = np.array([0.0, 0.0, 1.0, 1.0, 10.0, 11.0])
    sq = lloyd_max(x, 2, reproduction_alphabet=[0.0, 1.0, 10.0, 11.0])
    assert set(sq.codebook) <= {0.0, 1.0, 10.0, 11.0}


def test_lloyd_insufficient_support():
    with pytest.raises(InsufficientSupport):
        lloyd_max(np.array([1.0, 1.0, 2.0]), 3)


def test_lloyd_reseeds_empty_cell():
    # heavy mass at one end leaves a quantile-initialized code stranded
    x = np.concatenate([np.zeros(1000), np.arange(1.0, 4.0)])
    sq = lloyd_max(x, 3)
    assert len(np.unique(sq.codebook)) == 3


def test_ofssq_one_state_equals_lloyd(eight, eight_dist):
    x = eight.values[sample_path(eight, 50_000, 0)]
    cb = train_ofssq(x, 1, 2, eight_dist)
    sq = lloyd_max(x, 2, reproduction_alphabet=eight_dist.reproduction)
    assert cb.per_state[0] == sq
    assert ofssq_run(cb, eight, 10_000, 4, eight_dist) == scalar_run(sq, eight, 10_000, 4, eight_dist)


def test_ofssq_identity_classifier_shape(eight, eight_dist):
    x = eight.values[sample_path(eight, 100_000, 1)]
    cb = train_ofssq(x, 8, 3, eight_dist)
    assert cb.K == 8 and cb.M == 3
    assert np.array_equal(cb.classifier.codebook, np.arange(1.0, 9.0))


def test_ofssq_identity_classifier_needs_matching_K(eight, eight_dist):
    with pytest.raises(ValueError):
        train_ofssq(eight.values[:10], 5, 2, eight_dist)


def test_ofssq_beats_memoryless_on_correlated_source(eight, eight_dist):
    x = eight.values[sample_path(eight, 200_000, 2)]
    fs = ofssq_run(train_ofssq(x, 8, 6, eight_dist), eight, 50_000, 9, eight_dist)
    sq = scalar_run(lloyd_max(x, 6, reproduction_alphabet=eight_dist.reproduction), eight, 50_000, 9,
                    eight_dist)
    assert fs.snr_db > sq.snr_db


def test_ofssq_closed_loop_uses_reconstructions():
    # one level per state: state 0 always outputs 0.0, so the closed loop
    # never leaves state 0; classifying the true source value would move to
    # state 1 after every 1 and give [0, 1, 1, 0]
    src = new_finite_source([[0.5, 0.5], [0.5, 0.5]], [0.0, 1.0])
    dist = squared_error(src.values)
    cb = OFSSQCodebooks(ScalarQuantizer(np.array([0.0, 1.0])),
                        (ScalarQuantizer(np.array([0.0])), ScalarQuantizer(np.array([1.0]))))
    d = ofssq_distortions(cb, src, dist, np.array([0, 1, 0, 1]))
    assert d.tolist() == [0.0, 1.0, 0.0, 1.0]


def test_ofssq_sparse_bucket_falls_back(eight_dist):
    x = np.array([1.0, 2.0, 3.0, 1.0, 2.0, 3.0] * 50)
    cb = train_ofssq(x, 8, 2, eight_dist)
    glob = lloyd_max(x, 2, reproduction_alphabet=eight_dist.reproduction)
    assert cb.per_state[7] == glob


def test_scalar_run_iid_matches_expectation():
    src = iid_source([0.25, 0.25, 0.25, 0.25], [0.0, 1.0, 2.0, 3.0])
    sq = ScalarQuantizer(np.array([0.0, 2.0]))
    rep = scalar_run(sq, src, 100_000, 0)
    # distortions 0, 1, 0, 1 with equal probability
    assert rep.avg_distortion == pytest.approx(0.5, abs=0.01)
