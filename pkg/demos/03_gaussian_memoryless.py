"""
A memoryless Gaussian, discretized
==================================

For an i.i.d. source every predictor equals the marginal, so the learner
faces a single state and should recover the optimal scalar quantizer.
Here the real line is cut to a 241-point grid on [-6, 6] and quantizers
are restricted to contiguous cells, which keeps the action space
searchable. Lloyd-Max on the same grid is the reference.
"""

import numpy as np

from zdc import QuantizerSpace, TrainConfig, evaluate_policy, extract_policy, squared_error, train
from zdc.baselines import lloyd_max, scalar_run
from zdc.source import discretize_gauss_markov

src = discretize_gauss_markov(0.0)
dist = squared_error(src.values)
print(f"{src.m} grid points, variance {src.variance:.4f}")

for M in (2, 3, 4):
    space = QuantizerSpace(src.m, M, "convex_bins")
    cfg = TrainConfig(n=5, max_steps=50_000, seed=M)
    table, _ = train(src, dist, space, cfg)
    policy = extract_policy(table, cfg, space, src, dist)
    ours = evaluate_policy(src, policy, dist, 50_000, 0)
    sq = lloyd_max(M=M, values=src.values, weights=src.invariant, reproduction_alphabet=dist.reproduction)
    ref = scalar_run(sq, src, 50_000, 0, dist)
    cells = np.flatnonzero(np.diff(np.asarray(policy.action(next(iter(policy.action_map))))))
    print(f"R={np.log2(M):.2f}: learned {ours.snr_db:.3f} dB, Lloyd-Max {ref.snr_db:.3f} dB, "
          f"learned thresholds {np.round(src.values[cells] + 0.025, 3)}")
