"""Benchmarking harness: synthetic domains, metrics, and repeated trials.

Real detector dumps plug in as CSVs; the synthetic generator exists so the
method comparisons (and the acceptance checks behind them) run without any
external data. Shapes are a seasonal bump over a linear domain and a decaying
annulus profile, with a detector model of mean-one multiplicative noise,
Bernoulli misses, and Poisson false positives layered on the true counts.

``run_trials`` executes one (method, budget) cell: independent seeded trials,
per-trial records, and the aggregate metrics. Aggregates are produced by
``aggregate_records`` from the records alone, so persisted trial files can be
re-aggregated and checked against the saved summary.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .calibration import build_control_variate, estimate_calibrated, fit_isotonic
from .domain import DatasetError, Domain, LabelStore, Region, Unit, make_regions
from .estimators import (Estimate, estimate_discount, estimate_kdiscount,
                         estimate_kdiscount_cv, estimate_mc)
from .sampler import RandomStream, SampleDraw, sample_proportional, sample_uniform

__all__ = [
    "METHODS",
    "DEFAULT_COST_FACTORS",
    "SyntheticSpec",
    "generate_synthetic",
    "TrialConfig",
    "TrialResult",
    "run_trials",
    "aggregate_records",
    "fractional_error",
    "ci_width_normalized",
    "coverage",
    "labeling_effort",
    "summary_row",
    "write_summary_csv",
    "write_trials_jsonl",
    "make_regions",
]

METHODS = ("MC", "IS", "DIS", "kDIS", "kDIScv", "CAL")

# Per-label cost relative to screening an unfiltered unit. Verifying a
# detector's proposals is cheaper than open-ended annotation; methods that
# only show detector-flagged units inherit the discounted rate.
DEFAULT_COST_FACTORS = {
    "MC": 1.0,
    "IS": 1.0,
    "DIS": 0.26,
    "kDIS": 0.26,
    "kDIScv": 0.26,
    "CAL": 0.26,
}

SUMMARY_COLUMNS = ("method", "n", "mean_error", "error_se", "mean_ci_width",
                   "coverage", "mean_distinct", "effort_pct")


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a reproducible synthetic counting domain.

    ``shape`` picks the true-count profile over unit positions t in [0, 1]:
    "seasonal" is a Gaussian bump (center/width as fractions of the domain),
    "annulus" an exponential decay with scale ``width``. True counts are
    ``baseline + amplitude * profile``; the detector sees those counts under
    mean-one lognormal noise (``noise_scale``), drops a unit entirely with
    probability ``miss_rate``, and adds Poisson(``fp_rate``) false positives.

    ``covariate_shift`` (plus ``covariate_widen``) emits a deliberately
    misplaced copy of the profile as a covariate column: a stand-in for the
    cheap auxiliary signals importance-sampling baselines rely on.
    """

    size: int
    shape: str = "seasonal"
    amplitude: float = 100.0
    center: float = 0.5
    width: float = 0.15
    baseline: float = 0.0
    noise_scale: float = 0.0
    miss_rate: float = 0.0
    fp_rate: float = 0.0
    seed: int = 0
    covariate_shift: float | None = None
    covariate_widen: float = 1.0


def _profile(spec: SyntheticSpec, t: np.ndarray, center: float, width: float) -> np.ndarray:
    if spec.shape == "seasonal":
        return np.exp(-0.5 * ((t - center) / width) ** 2)
    return np.exp(-t / width)


def generate_synthetic(spec: SyntheticSpec) -> tuple[Domain, LabelStore]:
    """Materialize the spec into a domain plus ground-truth labels."""
    if not isinstance(spec.size, int) or isinstance(spec.size, bool) or spec.size < 1:
        raise ValueError("size must be an integer >= 1")
    if spec.shape not in ("seasonal", "annulus"):
        raise ValueError(f"unknown shape {spec.shape!r}")
    if spec.amplitude < 0 or spec.baseline < 0:
        raise ValueError("amplitude and baseline must be >= 0")
    if spec.width <= 0 or spec.covariate_widen <= 0:
        raise ValueError("width parameters must be > 0")
    if spec.noise_scale < 0 or spec.fp_rate < 0 or not 0.0 <= spec.miss_rate <= 1.0:
        raise ValueError("invalid detector noise parameters")

    t = (np.arange(spec.size) + 0.5) / spec.size
    f = spec.baseline + spec.amplitude * _profile(spec, t, spec.center, spec.width)

    rng = np.random.default_rng(spec.seed)
    g = f.copy()
    if spec.noise_scale > 0:
        z = rng.standard_normal(spec.size)
        g = g * np.exp(spec.noise_scale * z - spec.noise_scale ** 2 / 2)
    if spec.miss_rate > 0:
        g[rng.random(spec.size) < spec.miss_rate] = 0.0
    if spec.fp_rate > 0:
        g = g + rng.poisson(spec.fp_rate, spec.size)

    covariate = None
    if spec.covariate_shift is not None:
        covariate = spec.baseline + spec.amplitude * _profile(
            spec, t, spec.center + spec.covariate_shift,
            spec.width * spec.covariate_widen)

    digits = max(4, len(str(spec.size - 1)))
    units = [Unit(f"u{i:0{digits}d}", float(gi)) for i, gi in enumerate(g)]
    # smoothing exists to keep zero-count units drawable; when the detector
    # saw everything, skip it so a perfect detector stays bit-exact
    epsilon = 0.0 if g.min() > 0 else None
    domain = Domain(units, epsilon=epsilon, covariate=covariate)
    oracle = LabelStore({u.id: float(fi) for u, fi in zip(units, f)})
    return domain, oracle


def fractional_error(regions: Sequence[Region | str], estimates: Mapping,
                     truth: Mapping[str, float], F_Omega: float) -> float:
    """Mean absolute per-region error, normalized by the domain total."""
    if not F_Omega > 0:
        raise ValueError("fractional error undefined: domain total is not positive")
    names = [r.name if isinstance(r, Region) else r for r in regions]
    if not names:
        raise ValueError("at least one region is required")
    deviations = []
    for name in names:
        est = estimates[name]
        value = est.value if isinstance(est, Estimate) else float(est)
        deviations.append(abs(truth[name] - value))
    return math.fsum(deviations) / (len(names) * F_Omega)


def ci_width_normalized(estimates: Mapping[str, Estimate], F_Omega: float) -> float:
    """Mean CI width over regions that have one, as a fraction of F(Omega)."""
    if not F_Omega > 0:
        raise ValueError("width normalization undefined: domain total is not positive")
    widths = [est.ci_width() for est in estimates.values() if est.ci_width() is not None]
    if not widths:
        raise ValueError("no region has a defined interval")
    return math.fsum(widths) / (len(widths) * F_Omega)


def coverage(per_trial: Sequence[Mapping[str, Estimate]],
             truth: Mapping[str, float]) -> float:
    """Fraction of defined intervals, over all trials and regions, that
    contain the true count. NaN when nothing defines an interval."""
    hits, defined = 0, 0
    for estimates in per_trial:
        for name, est in estimates.items():
            if est.ci_low is None or est.ci_high is None:
                continue
            defined += 1
            if est.ci_low <= truth[name] <= est.ci_high:
                hits += 1
    return hits / defined if defined else math.nan


def labeling_effort(n_distinct: float, c: float, omega_size: int) -> float:
    """Screening effort as a percentage: 100 * c * n / |Omega|."""
    if not 0.0 < c <= 1.0:
        raise ValueError("cost factor must lie in (0, 1]")
    if omega_size < 1:
        raise ValueError("domain size must be >= 1")
    if n_distinct < 0:
        raise ValueError("distinct-label count must be >= 0")
    return 100.0 * c * n_distinct / omega_size


@dataclass(frozen=True)
class TrialConfig:
    """One benchmark cell: a method at a budget, repeated over seeds.

    ``regions`` is anything ``make_regions`` accepts, or a prebuilt Region
    list. ``c`` overrides the per-method labeling cost factor; None picks
    the default. ``cal_train_n`` is the uniformly drawn calibration budget
    for the model-based methods (kDIScv, CAL).
    """

    method: str
    n: int
    regions: Mapping | Sequence[Region]
    trials: int = 1000
    seed: int = 0
    variance_mode: str = "auto"
    alpha: float = 0.05
    cal_train_n: int = 15
    c: float | None = None

    def cost_factor(self) -> float:
        return DEFAULT_COST_FACTORS[self.method] if self.c is None else self.c


@dataclass(frozen=True)
class TrialResult:
    """Per-trial records plus the aggregates recomputable from them."""

    method: str
    n: int
    trials: int
    seed: int
    region_names: tuple[str, ...]
    truth: Mapping[str, float]
    F_Omega: float
    omega_size: int
    c: float
    records: tuple[Mapping, ...]
    mean_error: float
    error_se: float
    mean_ci_width: float | None
    coverage: float | None
    mean_distinct: float
    effort_pct: float


def _estimates_from_record(record: Mapping) -> dict[str, Estimate]:
    return {name: Estimate.from_dict(d) for name, d in record["estimates"].items()}


def aggregate_records(records: Sequence[Mapping], region_names: Sequence[str],
                      truth: Mapping[str, float], F_Omega: float) -> dict:
    """Reduce per-trial records to the summary metrics.

    This is the only aggregation path: results are built through it, and
    tests re-run it on persisted records to confirm the stored aggregates.
    """
    errors = []
    widths = []
    per_trial_estimates = []
    distincts = []
    for record in records:
        estimates = _estimates_from_record(record)
        per_trial_estimates.append(estimates)
        errors.append(fractional_error(list(region_names), estimates, truth, F_Omega))
        distincts.append(record["distinct"])
        try:
            widths.append(ci_width_normalized(estimates, F_Omega))
        except ValueError:
            pass
    mean_error = math.fsum(errors) / len(errors)
    if len(errors) > 1:
        spread = math.fsum((e - mean_error) ** 2 for e in errors) / (len(errors) - 1)
        error_se = math.sqrt(spread / len(errors))
    else:
        error_se = 0.0
    cov = coverage(per_trial_estimates, truth)
    return {
        "mean_error": mean_error,
        "error_se": error_se,
        "mean_ci_width": math.fsum(widths) / len(widths) if widths else None,
        "coverage": None if math.isnan(cov) else cov,
        "mean_distinct": math.fsum(float(d) for d in distincts) / len(distincts),
    }


def _materialize_regions(domain: Domain, spec) -> list[Region]:
    if isinstance(spec, Mapping):
        return make_regions(domain, spec)
    regions = list(spec)
    if not regions or not all(isinstance(r, Region) for r in regions):
        raise ValueError("regions must be a spec mapping or a list of Region")
    return regions


def _empty(method: str, alpha: float) -> Estimate:
    return Estimate(value=0.0, n_region=0, sigma_hat=0.0, ci_low=None, ci_high=None,
                    alpha=alpha, method=method, empty_region=True)


def _run_mc(domain, regions, labels, n, stream, alpha):
    draw = sample_uniform(domain, None, n, stream)
    estimates = {}
    for region in regions:
        sub = [uid for uid in draw.ids if uid in region.members]
        if not sub:
            estimates[region.name] = _empty("MC", alpha)
            continue
        region_draw = SampleDraw.build(sub, region.name, "uniform")
        estimates[region.name] = estimate_mc(domain, region, region_draw, labels, alpha)
    return estimates, draw.distinct


def _run_is(proposal_domain, regions, labels, n, stream, alpha, variance_mode):
    draw = sample_proportional(proposal_domain, None, n, stream)
    out = estimate_kdiscount(proposal_domain, regions, draw, labels, alpha,
                             variance_mode)
    retagged = {name: dataclasses.replace(est, method="IS")
                for name, est in out.items()}
    return retagged, draw.distinct


def _run_dis(domain, regions, labels, n, stream, alpha):
    k = len(regions)
    base, extra = divmod(n, k)
    estimates = {}
    distinct: set[str] = set()
    for i, region in enumerate(regions):
        budget = base + (1 if i < extra else 0)
        if budget == 0:
            estimates[region.name] = _empty("DIS", alpha)
            continue
        draw = sample_proportional(domain, region, budget, stream)
        distinct |= draw.distinct
        estimates[region.name] = estimate_discount(domain, region, draw, labels, alpha)
    return estimates, distinct


def _fit_calibration(domain, labels, cal_train_n, stream):
    cal_draw = sample_uniform(domain, None, cal_train_n, stream)
    positions = domain.indices_for(cal_draw.ids)
    pairs = [(float(domain.g[p]), labels.get(uid))
             for p, uid in zip(positions, cal_draw.ids)]
    return fit_isotonic(pairs), cal_draw.distinct


def run_trials(domain: Domain, oracle: LabelStore, config: TrialConfig) -> TrialResult:
    """Run the configured method over independent seeded trials.

    Trial t draws from stream (seed, t), so the whole result is a pure
    function of the config and the data. The oracle must label every unit:
    trials screen units mechanically instead of asking a human.
    """
    if config.method not in METHODS:
        raise ValueError(f"unknown method {config.method!r}")
    if config.trials < 1:
        raise ValueError("trial count must be >= 1")
    if config.n < 1:
        raise ValueError("draw budget must be >= 1")
    missing = [uid for uid in domain.ids if uid not in oracle]
    if missing:
        raise DatasetError(f"oracle labels missing for {len(missing)} unit(s), "
                           f"e.g. {missing[0]!r}")
    c = config.cost_factor()
    if not 0.0 < c <= 1.0:
        raise ValueError("cost factor must lie in (0, 1]")

    regions = _materialize_regions(domain, config.regions)
    names = [r.name for r in regions]
    truth = {r.name: oracle.total(sorted(r.members)) for r in regions}
    F_Omega = oracle.total(domain.ids)

    proposal_domain = None
    if config.method == "IS":
        if domain.covariate is None:
            raise ValueError("method IS needs a covariate column on the domain")
        proposal_domain = domain.with_counts(domain.covariate)

    records = []
    for t in range(config.trials):
        stream = RandomStream(config.seed, stream_id=t)
        distinct: frozenset[str] | set[str]
        if config.method == "MC":
            estimates, distinct = _run_mc(domain, regions, oracle, config.n, stream,
                                          config.alpha)
        elif config.method == "IS":
            estimates, distinct = _run_is(proposal_domain, regions, oracle, config.n,
                                          stream, config.alpha, config.variance_mode)
        elif config.method == "DIS":
            estimates, distinct = _run_dis(domain, regions, oracle, config.n, stream,
                                           config.alpha)
        elif config.method == "kDIS":
            draw = sample_proportional(domain, None, config.n, stream)
            estimates = estimate_kdiscount(domain, regions, draw, oracle,
                                           config.alpha, config.variance_mode)
            distinct = draw.distinct
        elif config.method == "kDIScv":
            model, cal_distinct = _fit_calibration(domain, oracle, config.cal_train_n,
                                                   stream)
            cv = build_control_variate(model, domain, regions)
            draw = sample_proportional(domain, None, config.n, stream)
            estimates = estimate_kdiscount_cv(domain, regions, draw, oracle, cv,
                                              config.alpha, config.variance_mode)
            distinct = set(cal_distinct) | set(draw.distinct)
        else:  # CAL
            model, distinct = _fit_calibration(domain, oracle, config.cal_train_n,
                                               stream)
            estimates = {r.name: estimate_calibrated(domain, r, model, config.alpha)
                         for r in regions}
        records.append({
            "trial": t,
            "distinct": len(distinct),
            "estimates": {name: estimates[name].to_dict() for name in names},
        })

    agg = aggregate_records(records, names, truth, F_Omega)
    return TrialResult(
        method=config.method,
        n=config.n,
        trials=config.trials,
        seed=config.seed,
        region_names=tuple(names),
        truth=truth,
        F_Omega=F_Omega,
        omega_size=len(domain),
        c=c,
        records=tuple(records),
        effort_pct=labeling_effort(agg["mean_distinct"], c, len(domain)),
        **agg,
    )


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def summary_row(result: TrialResult) -> dict:
    return {
        "method": result.method,
        "n": result.n,
        "mean_error": result.mean_error,
        "error_se": result.error_se,
        "mean_ci_width": result.mean_ci_width,
        "coverage": result.coverage,
        "mean_distinct": result.mean_distinct,
        "effort_pct": result.effort_pct,
    }


def write_summary_csv(results: Sequence[TrialResult], path: str) -> None:
    lines = [",".join(SUMMARY_COLUMNS)]
    for result in results:
        row = summary_row(result)
        lines.append(",".join(_cell(row[col]) for col in SUMMARY_COLUMNS))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def write_trials_jsonl(results: Sequence[TrialResult], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for result in results:
            for record in result.records:
                wire = {"method": result.method, "n": result.n}
                wire.update(record)
                fh.write(json.dumps(wire, sort_keys=False) + "\n")
