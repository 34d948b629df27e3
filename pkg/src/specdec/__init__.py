"""specdec: a laboratory for rejection-based decoding of finite token models.

The package pairs every decoding algorithm with its exact analysis so each
side can be validated against the other: samplers (speculative, generic
rejection, batch speculative) against closed-form expected-rejection
recursions, and both against brute-force decision-tree enumeration.
"""

from .decoding import (
    InvalidPolicy,
    Policy,
    RunStats,
    Trajectory,
    autoregressive_decode,
    batch_decode,
    generic_decode,
    speculative_decode,
)
from .dist import Dist, ZeroResidual, rejection_iterate, residual_plus, tv_distance
from .enumeration import enumerate_expected_rejections, enumerate_output_distribution
from .exact import (
    BatchRejections,
    acceleration_rate,
    batch_improvement_bernoulli,
    batch_improvement_uniform,
    expected_rejections_batch,
    expected_rejections_sd,
    limit_rejections,
    sd_marginal_terms,
)
from .models import (
    CondDist,
    FullModel,
    MarkovModel,
    ModelPair,
    joint_distribution,
    joint_probability,
    markov_to_full,
    model_from_descriptor,
    model_to_descriptor,
    pair_from_descriptor,
    random_markov_model,
    random_model_pair,
    target_marginals,
)
from .montecarlo import (
    BatchScanRow,
    Campaign,
    CampaignReport,
    Checkpoint,
    UnbiasednessReport,
    batch_scan,
    report_header,
    run_campaign,
    unbiasedness_check,
)
from .policies import (
    always_accept_policy,
    over_acceptance_policy,
    random_unbiased_policy,
    sd_policy,
)
from .rng import make_rng, split_rng
from .tradeoff import (
    DegenerateRejection,
    ParetoPoint,
    ResidualCharacterization,
    epsilon_acceptance,
    induced_output_distribution,
    is_optimal_residual,
    loss_tv_star,
    optimal_residual,
    pareto_front,
    rejection_probability,
    tradeoff_identity_gap,
)

__version__ = "0.1.0"

__all__ = [
    "BatchRejections",
    "BatchScanRow",
    "Campaign",
    "CampaignReport",
    "Checkpoint",
    "CondDist",
    "DegenerateRejection",
    "Dist",
    "FullModel",
    "InvalidPolicy",
    "MarkovModel",
    "ModelPair",
    "ParetoPoint",
    "Policy",
    "ResidualCharacterization",
    "RunStats",
    "Trajectory",
    "UnbiasednessReport",
    "ZeroResidual",
    "acceleration_rate",
    "always_accept_policy",
    "autoregressive_decode",
    "batch_decode",
    "batch_improvement_bernoulli",
    "batch_improvement_uniform",
    "batch_scan",
    "enumerate_expected_rejections",
    "enumerate_output_distribution",
    "epsilon_acceptance",
    "expected_rejections_batch",
    "expected_rejections_sd",
    "generic_decode",
    "induced_output_distribution",
    "is_optimal_residual",
    "joint_distribution",
    "joint_probability",
    "limit_rejections",
    "loss_tv_star",
    "make_rng",
    "markov_to_full",
    "model_from_descriptor",
    "model_to_descriptor",
    "optimal_residual",
    "over_acceptance_policy",
    "pair_from_descriptor",
    "pareto_front",
    "random_markov_model",
    "random_model_pair",
    "random_unbiased_policy",
    "rejection_iterate",
    "report_header",
    "rejection_probability",
    "residual_plus",
    "run_campaign",
    "sd_marginal_terms",
    "sd_policy",
    "speculative_decode",
    "split_rng",
    "target_marginals",
    "tradeoff_identity_gap",
    "tv_distance",
    "unbiasedness_check",
]
