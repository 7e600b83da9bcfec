"""
Learning a zero-delay code for a finite Markov source
=====================================================

Train the Q-learning encoder on the eight-state source at one bit per
sample and compare against two classical designs on the same sample path:
a memoryless Lloyd-Max quantizer and a finite-state scalar quantizer
with one Lloyd-Max codebook per previous-output class.

Runs in about a minute. The experiment runner (``zdc experiment``) does
the same over many rates with the shipped configs.
"""

import time

from zdc import QuantizerSpace, TrainConfig, eight_state_source, evaluate_policy, extract_policy
from zdc import squared_error, train
from zdc.baselines import lloyd_max, ofssq_run, scalar_run, train_ofssq
from zdc.source import sample_path

src = eight_state_source()
dist = squared_error(src.values)
M, T = 2, 10**5

x = src.values[sample_path(src, 10**6, 123)]
memoryless = scalar_run(lloyd_max(x, M, reproduction_alphabet=dist.reproduction), src, T, 0, dist)
fssq = ofssq_run(train_ofssq(x, 8, M, dist), src, T, 0, dist)
print(f"Lloyd-Max      {memoryless.snr_db:6.3f} dB")
print(f"O-FSSQ (K=8)   {fssq.snr_db:6.3f} dB")

space = QuantizerSpace(8, M)
for n in (1, 2):
    cfg = TrainConfig(n=n, max_steps=10**6, seed=1)
    t0 = time.time()
    table, stats = train(src, dist, space, cfg)
    policy = extract_policy(table, cfg, space, src, dist)
    rep = evaluate_policy(src, policy, dist, T, 0)
    print(f"Q-learning n={n} {rep.snr_db:6.3f} dB  ({stats.steps} steps, "
          f"{len(policy.action_map)} states in the policy, {time.time() - t0:.0f}s)")
