"""
Beliefs, bins and the type lattice
==================================

The decoder never sees the source, only channel symbols. What it carries
from step to step is a predictor: a distribution over the next source
symbol. This script walks one predictor forward by hand and snaps it onto
the finite lattice that the learner uses as its state space.
"""

import numpy as np

from zdc import eight_state_source, squared_error
from zdc.belief import optimal_reconstruction, predictor_update, stage_cost
from zdc.simplex import lattice_size, max_bin_radius, quantize

src = eight_state_source()
dist = squared_error(src.values)
print("stationary distribution:", np.round(src.invariant, 4))
print("source variance: %.4f" % src.variance)

# a 2-level quantizer: symbols 1..4 -> channel 0, 5..8 -> channel 1
Q = np.array([0, 0, 0, 0, 1, 1, 1, 1])
pi = src.invariant
print("expected distortion at the stationary belief: %.4f" % stage_cost(pi, Q, dist))
print("decoder outputs per channel symbol:",
      [optimal_reconstruction(np.where(Q == q, pi, 0), dist) for q in (0, 1)])

# the encoder sent 1, so the decoder now knows X was 5..8
nxt = predictor_update(pi, Q, 1, src.P)
print("predictor after seeing channel symbol 1:", np.round(nxt, 4))

# the learner keys its table on the nearest point of a coarse lattice
for n in (1, 2, 5):
    t = quantize(nxt, n)
    print(f"n={n}: {lattice_size(8, n):4d} lattice points, nearest {t.counts}, "
          f"resolution bound {max_bin_radius(8, n):.3f}")
