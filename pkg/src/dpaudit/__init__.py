"""Privacy-preserving, platform-supported fairness auditing at desk scale.

The pipeline: an auditor uploads per-group audiences, the platform scores
them with a (possibly biased) relevance estimator and releases Laplace-noised
histograms under a per-auditor epsilon budget, and the auditor tests the
worst-pair fairness gap against a tolerance alpha. The planner computes how
many qualified samples per group make that test sound, with and without
privacy.
"""

from .core import (AttributeId, AuditSpec, FairnessReport, NoisyHistogram,
                   ScoreDomain, ScoreHistogram, efg, efg_cdf,
                   empirical_distribution, evaluate_audit, noisy_distribution)
from .errors import (AuditError, BudgetExhausted, DuplicateAudienceHandle,
                     EmptyAudience, EpsilonTooSmall, GroupCountMismatch,
                     InsufficientPopulation, InsufficientTrials, InvalidEpsilon,
                     InvalidMix, InvalidParameter, MixedGroupAudience,
                     TooFewGroups, UnknownAudience, ZeroQualifiedGroup)
from .estimator import (BaseDistribution, EstimatorConfig, RandomBias,
                        base_pmf, estimator_from_dict, estimator_to_dict,
                        expected_distribution, score, score_audience)
from .harness import (ExperimentResult, ExperimentSpec, TradeoffPoint,
                      experiment_from_dict, load_experiment_config,
                      result_csv, run_experiment, run_trial, summarize,
                      tradeoff_csv, tradeoff_curve, true_distributions,
                      true_gap)
from .planner import (UPPER_BOUND_FACTOR, PlanResult, SweepPoint, factor_curve,
                      factor_sweep, n_min_nonprivate, n_min_private,
                      sdp_factor, sweep_csv)
from .population import (Population, UserRecord, generate_population,
                         load_population, sample_audience, save_population)
from .privacy import (BudgetLedger, LaplaceNoiser, LedgerEntry,
                      histogram_sensitivity, laplace_inverse_cdf,
                      privatize_histogram, replay_ledgers, sample_laplace)
from .seeds import spawn_seed, substream

__version__ = "0.1.0"

__all__ = [
    "AttributeId",
    "AuditError",
    "AuditSpec",
    "BaseDistribution",
    "BudgetExhausted",
    "BudgetLedger",
    "DuplicateAudienceHandle",
    "EmptyAudience",
    "EpsilonTooSmall",
    "EstimatorConfig",
    "ExperimentResult",
    "ExperimentSpec",
    "FairnessReport",
    "GroupCountMismatch",
    "InsufficientPopulation",
    "InsufficientTrials",
    "InvalidEpsilon",
    "InvalidMix",
    "InvalidParameter",
    "LaplaceNoiser",
    "LedgerEntry",
    "MixedGroupAudience",
    "NoisyHistogram",
    "PlanResult",
    "Population",
    "RandomBias",
    "ScoreDomain",
    "ScoreHistogram",
    "SweepPoint",
    "TooFewGroups",
    "TradeoffPoint",
    "UPPER_BOUND_FACTOR",
    "UnknownAudience",
    "UserRecord",
    "ZeroQualifiedGroup",
    "base_pmf",
    "efg",
    "efg_cdf",
    "empirical_distribution",
    "estimator_from_dict",
    "estimator_to_dict",
    "evaluate_audit",
    "experiment_from_dict",
    "expected_distribution",
    "factor_curve",
    "factor_sweep",
    "generate_population",
    "histogram_sensitivity",
    "laplace_inverse_cdf",
    "load_experiment_config",
    "load_population",
    "n_min_nonprivate",
    "n_min_private",
    "noisy_distribution",
    "privatize_histogram",
    "replay_ledgers",
    "result_csv",
    "run_experiment",
    "run_trial",
    "sample_audience",
    "sample_laplace",
    "save_population",
    "score",
    "score_audience",
    "sdp_factor",
    "spawn_seed",
    "substream",
    "summarize",
    "sweep_csv",
    "tradeoff_csv",
    "tradeoff_curve",
    "true_distributions",
    "true_gap",
]
