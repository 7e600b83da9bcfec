import itertools

import numpy as np
import pytest

from zdc.belief import squared_error, stage_cost, stage_costs_many
from zdc.errors import ConfigMismatch, EmptyTable, ModeMismatch
from zdc.evaluation import discounted_cost_samples
from zdc.persist import qtable_to_dict
from zdc.qlearning import (
    Policy,
    QLearner,
    QTable,
    TrainConfig,
    best_quantizer,
    extract_policy,
    sup_norm_delta,
    train,
)
from zdc.quantizers import QuantizerSpace, quantizer_array
from zdc.simplex import quantize
from zdc.source import iid_source, new_finite_source

IID_PROBS = [0.1, 0.2, 0.3, 0.4]


@pytest.fixture
def iid4():
    return iid_source(IID_PROBS, [1.0, 2.0, 3.0, 4.0])


def test_iid_visits_single_state(iid4):
    dist = squared_error(iid4.values)
    space = QuantizerSpace(4, 2)
    learner = QLearner(iid4, dist, space, TrainConfig(n=4, beta=0.9, seed=0),
                       initial=[0.25, 0.25, 0.25, 0.25])
    for _ in range(3000):
        learner.step()
    zeta_hat = quantize(iid4.invariant, 4).counts
    # the arbitrary initial belief is the only other state ever seen
    assert set(learner.table.rows) == {quantize([0.25] * 4, 4).counts, zeta_hat}
    assert learner.table.state_visits[quantize([0.25] * 4, 4).counts] == 1


def test_q_values_bounded_throughout(eight, eight_dist):
    cfg = TrainConfig(n=2, beta=0.9, seed=3)
    learner = QLearner(eight, eight_dist, QuantizerSpace(8, 2), cfg)
    bound = eight_dist.max_cost / (1 - cfg.beta)
    for t in range(5000):
        s, a, _ = learner.step()
        q = learner.table.get(s, a)
        assert 0.0 <= q <= bound
    assert all(0 <= v <= bound for v in learner.table.snapshot().values())


def test_learning_rate_law_and_single_entry_update(eight, eight_dist):
    learner = QLearner(eight, eight_dist, QuantizerSpace(8, 2), TrainConfig(n=1, beta=0.95, seed=4))
    for _ in range(3000):
        before = learner.table.snapshot()
        prior_visits = learner.table.visits(learner.state, tuple(learner.action.tolist()))
        s, a, alpha = learner.step()
        assert alpha == 1.0 / (1 + prior_visits)
        assert learner.table.visits(s, a) == prior_visits + 1
        after = learner.table.snapshot()
        changed = {k for k in before.keys() | after.keys() if before.get(k, 0.0) != after.get(k, 0.0)}
        assert changed <= {(s, a)}


def test_visits_count_updates(eight, eight_dist):
    table, stats = train(eight, eight_dist, QuantizerSpace(8, 2),
                         TrainConfig(n=1, max_steps=4000, seed=5))
    assert sum(k for *_, k in table.entries()) == stats.steps == 4000
    assert sum(table.state_visits.values()) == 4000


def test_training_reproducible(eight, eight_dist):
    cfg = TrainConfig(n=3, max_steps=3000, seed=11)
    a, _ = train(eight, eight_dist, QuantizerSpace(8, 3), cfg)
    b, _ = train(eight, eight_dist, QuantizerSpace(8, 3), cfg)
    assert qtable_to_dict(a) == qtable_to_dict(b)


def test_stop_rule_fires(iid4):
    # with a short horizon the single-state values settle quickly
    cfg = TrainConfig(n=2, beta=0.5, stop_epsilon=1e-3, check_interval=2000, max_steps=10**6, seed=0)
    _, stats = train(iid4, squared_error(iid4.values), QuantizerSpace(4, 2), cfg)
    assert stats.converged and stats.final_delta <= 1e-3
    assert stats.steps % 2000 == 0 and stats.steps < 10**6


def test_surjective_space_rejected(eight, eight_dist):
    with pytest.raises(ModeMismatch):
        train(eight, eight_dist, QuantizerSpace(8, 2, "surjective"), TrainConfig(max_steps=10))


def test_min_value_zero_until_row_complete():
    t = QTable(1, 0.9, 2, 2, n_actions=4)
    s = (1, 0)
    for i, a in enumerate([(0, 0), (0, 1), (1, 0)]):
        t.update(s, a, 1.0 + i)
    assert t.min_value(s) == 0.0
    t.update(s, (1, 1), 0.5)
    assert t.min_value(s) == 0.5
    t.update(s, (1, 1), 10.0)  # the minimum entry increases
    assert t.min_value(s) == pytest.approx(1.0)


def test_sup_norm_delta():
    a = QTable(2, 0.9, 2, 2, 4)
    b = QTable(2, 0.9, 2, 2, 4)
    assert sup_norm_delta(a, b) == 0
    a.update((1, 1), (0, 1), 1.0)
    b.update((1, 1), (0, 1), 0.5)
    assert sup_norm_delta(a, b) == pytest.approx(0.5)
    a.update((2, 0), (0, 0), 3.0)
    assert sup_norm_delta(a, b) == pytest.approx(3.0)
    with pytest.raises(ConfigMismatch):
        sup_norm_delta(a, QTable(3, 0.9, 2, 2, 4))


def test_extract_policy_empty(eight, eight_dist):
    with pytest.raises(EmptyTable):
        extract_policy(QTable(1, 0.9, 8, 2, 256), TrainConfig(n=1), QuantizerSpace(8, 2), eight, eight_dist)


def test_extract_policy_iid_attains_myopic_optimum(iid4):
    dist = squared_error(iid4.values)
    space = QuantizerSpace(4, 2)
    cfg = TrainConfig(n=4, beta=0.9, max_steps=20000, seed=1)
    table, _ = train(iid4, dist, space, cfg)
    policy = extract_policy(table, cfg, space, iid4, dist)
    assert len(policy.action_map) == 1
    (action,) = policy.action_map.values()
    costs = stage_costs_many(iid4.invariant, quantizer_array(space), dist)
    assert stage_cost(iid4.invariant, action, dist) == pytest.approx(costs.min(), abs=1e-12)
    assert policy.fallback == action


def test_distortion_scaling_leaves_policy_unchanged(eight, eight_dist):
    space = QuantizerSpace(8, 2)
    cfg = TrainConfig(n=2, beta=0.95, max_steps=20000, seed=9)
    base = extract_policy(train(eight, eight_dist, space, cfg)[0], cfg, space, eight, eight_dist)
    scaled_dist = eight_dist.scaled(4.0)
    scaled = extract_policy(train(eight, scaled_dist, space, cfg)[0], cfg, space, eight, scaled_dist)
    assert scaled.action_map == base.action_map


def test_best_quantizer_full_and_convex_agree_for_squared_error(eight_dist):
    rng = np.random.default_rng(0)
    for M in (2, 3):
        full = QuantizerSpace(8, M)
        convex = QuantizerSpace(8, M, "convex_bins")
        for pi in rng.dirichlet(np.ones(8), size=5):
            a = best_quantizer(pi, eight_dist, full)
            b = best_quantizer(pi, eight_dist, convex)
            assert stage_cost(pi, a, eight_dist) == pytest.approx(stage_cost(pi, b, eight_dist), abs=1e-12)
            brute = stage_costs_many(pi, quantizer_array(full), eight_dist).min()
            assert stage_cost(pi, a, eight_dist) == pytest.approx(brute, abs=1e-12)


def _brute_force_best(source, dist, space, n, fallback, states, beta, horizon, runs, seed):
    """Best Monte Carlo discounted cost over every stationary map from
    ``states`` to quantizers; all candidates share the same sample paths."""
    actions = [tuple(a) for a in quantizer_array(space).tolist()]
    best = np.inf
    for combo in itertools.product(actions, repeat=len(states)):
        policy = Policy(n, space.M, fallback, dict(zip(states, combo)))
        best = min(best, discounted_cost_samples(source, policy, dist, beta, horizon, runs, seed).mean())
    return best


@pytest.mark.parametrize("P,values,M,n", [
    ([[0.7, 0.3], [0.4, 0.6]], [0.0, 1.0], 2, 2),
    ([[0.6, 0.3, 0.1], [0.2, 0.5, 0.3], [0.3, 0.1, 0.6]], [0.0, 1.0, 2.0], 2, 1),
])
def test_small_instance_matches_exhaustive_search(P, values, M, n):
    source = new_finite_source(P, values)
    dist = squared_error(source.values)
    space = QuantizerSpace(source.m, M)
    cfg = TrainConfig(n=n, beta=0.8, max_steps=50000, seed=2)
    table, _ = train(source, dist, space, cfg)
    policy = extract_policy(table, cfg, space, source, dist)
    states = sorted(policy.action_map)
    horizon, runs = 40, 30
    ours = discounted_cost_samples(source, policy, dist, cfg.beta, horizon, runs, 0).mean()
    best = _brute_force_best(source, dist, space, n, policy.fallback, states, cfg.beta, horizon, runs, 0)
    assert ours <= best + 1e-2


@pytest.mark.slow
def test_recurrence_of_visited_states(eight, eight_dist):
    learner = QLearner(eight, eight_dist, QuantizerSpace(8, 2), TrainConfig(n=1, seed=6))
    early = set()
    for _ in range(10**4):
        early.add(learner.step()[0])
    late = set()
    for _ in range(10**6):
        late.add(learner.step()[0])
    assert early <= late
