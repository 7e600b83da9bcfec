"""Zero-delay quantizer design for finite-alphabet Markov sources by
quantized Q-learning over the predictor simplex."""

from .baselines import OFSSQCodebooks, ScalarQuantizer, lloyd_max, ofssq_run, scalar_run, train_ofssq
from .belief import (
    DistortionSpec,
    filter_from_predictor,
    optimal_reconstruction,
    predictor_update,
    squared_error,
    stage_cost,
    tv_distance,
)
from .evaluation import (
    RunReport,
    discounted_cost_estimate,
    evaluate_policy,
    filter_stability_diagnostic,
    snr_db,
)
from .qlearning import Policy, QTable, TrainConfig, TrainStats, extract_policy, sup_norm_delta, train
from .quantizers import QuantizerSpace, apply, enumerate_quantizers, sample_uniform
from .simplex import TypeVector, enumerate_lattice, lattice_size, max_bin_radius, quantize, table_key
from .source import (
    FiniteSource,
    discretize_gauss_markov,
    eight_state_source,
    invariant_distribution,
    new_finite_source,
    sample_path,
)

__version__ = "0.1.0"
