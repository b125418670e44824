"""Detector-guided importance sampling for counting over large collections.

Workflow: load a domain of units scored by a noisy detector, draw units
proportionally to the detector counts, have a human verify the true count
on each distinct drawn unit, and turn the verified draws into unbiased
per-region count estimates with confidence intervals; calibration and
control variates squeeze the intervals further.
"""

from .analytics import (Allocation, binomial_inverse_moment, exact_bias, exact_variance,
                        excess_variance_ratio, normal_quantile, optimal_allocation)
from .calibration import (IsotonicModel, build_control_variate, estimate_calibrated,
                          fit_isotonic, predict)
from .domain import (DatasetError, Domain, LabelStore, Region, Unit, load_dataset,
                     load_regions, make_regions, region_mass, smooth_counts,
                     write_dataset_csv)
from .estimators import (POOLED_SAMPLE_THRESHOLD, ControlVariate, Estimate, Weight,
                         confidence_interval, debias, estimate_discount, estimate_is,
                         estimate_kdiscount, estimate_kdiscount_cv, estimate_mc,
                         sigma_hat, weight_table)
from .evaluation import (DEFAULT_COST_FACTORS, METHODS, SyntheticSpec, TrialConfig,
                         TrialResult, aggregate_records, ci_width_normalized, coverage,
                         fractional_error, generate_synthetic, labeling_effort,
                         run_trials, summary_row, write_summary_csv, write_trials_jsonl)
from .sampler import (RNG_ALGORITHM, RandomStream, SampleDraw, sample_from_weights,
                      sample_proportional, sample_uniform)
from .session import (DatasetEntry, ScreeningSession, SessionConfig, SessionError,
                      SessionStore)

__version__ = "0.1.0"

__all__ = [
    "Allocation", "binomial_inverse_moment", "exact_bias", "exact_variance",
    "excess_variance_ratio", "normal_quantile", "optimal_allocation",
    "IsotonicModel", "build_control_variate", "estimate_calibrated", "fit_isotonic",
    "predict",
    "DatasetError", "Domain", "LabelStore", "Region", "Unit", "load_dataset",
    "load_regions", "make_regions", "region_mass", "smooth_counts", "write_dataset_csv",
    "POOLED_SAMPLE_THRESHOLD", "ControlVariate", "Estimate", "Weight",
    "confidence_interval", "debias", "estimate_discount", "estimate_is",
    "estimate_kdiscount", "estimate_kdiscount_cv", "estimate_mc", "sigma_hat",
    "weight_table",
    "RNG_ALGORITHM", "RandomStream", "SampleDraw", "sample_from_weights",
    "sample_proportional", "sample_uniform",
    "DatasetEntry", "ScreeningSession", "SessionConfig", "SessionError",
    "SessionStore",
    "DEFAULT_COST_FACTORS", "METHODS", "SyntheticSpec", "TrialConfig", "TrialResult",
    "aggregate_records", "ci_width_normalized", "coverage", "fractional_error",
    "generate_synthetic", "labeling_effort", "run_trials", "summary_row",
    "write_summary_csv", "write_trials_jsonl",
    "__version__",
]
