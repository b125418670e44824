"""Count estimators over labeled draws.

All estimators share one report shape (:class:`Estimate`) and one set of
conventions:

* importance weight of a draw: ``w = f(s) / g(s)`` against the smoothed
  per-unit mass (or ``(f - h)/g`` under a control variate);
* ``sigma_hat`` is the population-style spread of the weights around the
  scope mean (divide by the in-scope count, not count-1);
* intervals are normal: ``value +/- z_{alpha/2} * scale * sigma / sqrt(n)``
  where ``scale`` is the mass of the scope the weights were normalized
  against (|S| for uniform draws, 1 for explicit proposals, G(S) for
  detector-proportional draws).

Shared-draw estimators (``estimate_kdiscount`` and its control-variate
twin) take one whole-domain batch and report every region from it; a
region that caught no draws reports value 0 with the ``empty_region``
flag and no interval. Regions may overlap, in which case a draw
contributes to each region containing it.

Sums are compensated (``math.fsum``) throughout.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .analytics import normal_quantile
from .domain import Domain, LabelStore, Region, region_mass
from .sampler import SampleDraw

__all__ = [
    "POOLED_SAMPLE_THRESHOLD",
    "Estimate",
    "Weight",
    "ControlVariate",
    "estimate_mc",
    "estimate_is",
    "estimate_discount",
    "estimate_kdiscount",
    "estimate_kdiscount_cv",
    "sigma_hat",
    "confidence_interval",
    "debias",
    "weight_table",
]

# Regions with fewer in-region draws than this fall back to the pooled
# whole-domain spread under the default variance mode.
POOLED_SAMPLE_THRESHOLD = 30

_VARIANCE_MODES = ("auto", "per-region", "pooled")


@dataclass(frozen=True)
class Estimate:
    """One region's count estimate plus its uncertainty report.

    ``ci_low``/``ci_high`` are None when no interval is defined (empty
    region, or a deterministic method). ``variance_mode`` records which
    spread fed the interval: "per-region" or "pooled" (None when there is
    no interval).
    """

    value: float
    n_region: int
    sigma_hat: float
    ci_low: float | None
    ci_high: float | None
    alpha: float
    method: str
    empty_region: bool = False
    variance_mode: str | None = None
    debiased: bool = False

    def ci_width(self) -> float | None:
        if self.ci_low is None or self.ci_high is None:
            return None
        return self.ci_high - self.ci_low

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "n_region": self.n_region,
            "sigma_hat": self.sigma_hat,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "alpha": self.alpha,
            "method": self.method,
            "empty_region": self.empty_region,
            "variance_mode": self.variance_mode,
            "debiased": self.debiased,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "Estimate":
        return cls(**{k: d[k] for k in (
            "value", "n_region", "sigma_hat", "ci_low", "ci_high", "alpha",
            "method", "empty_region", "variance_mode", "debiased")})


@dataclass(frozen=True)
class Weight:
    """One draw's importance weight, for inspection and serialization."""

    unit_id: str
    w: float

    def __post_init__(self):
        if not math.isfinite(self.w):
            raise ValueError(f"non-finite weight for unit {self.unit_id!r}")


class ControlVariate:
    """Known per-unit control values with exact region totals.

    ``h`` must cover every unit of the domain so that the region totals
    H(S) are exact sums, not estimates. Totals are computed here with
    compensated summation; caller-supplied totals are verified against
    the recomputation to 1e-10 relative.
    """

    def __init__(self, h: Mapping[str, float], domain: Domain,
                 regions: Sequence[Region], totals: Mapping[str, float] | None = None):
        missing = [u for u in domain.ids if u not in h]
        if missing:
            raise ValueError(f"control variate lacks values for {len(missing)} unit(s), "
                             f"e.g. {missing[0]!r}")
        values = np.asarray([float(h[u]) for u in domain.ids], dtype=np.float64)
        if not np.all(np.isfinite(values)):
            raise ValueError("control values must be finite")
        self._values = values
        self._domain = domain
        self.totals: dict[str, float] = {}
        for region in regions:
            exact = math.fsum(values[region.member_indices(domain)])
            if totals is not None and region.name in totals:
                claimed = float(totals[region.name])
                tol = 1e-10 * max(1.0, abs(exact))
                if abs(claimed - exact) > tol:
                    raise ValueError(
                        f"region {region.name!r}: claimed total {claimed!r} does not match "
                        f"the exact sum {exact!r}")
            self.totals[region.name] = exact

    def h_for(self, ids: Sequence[str]) -> np.ndarray:
        return self._values[self._domain.indices_for(ids)]

    def total(self, region_name: str) -> float:
        try:
            return self.totals[region_name]
        except KeyError:
            raise ValueError(f"control variate has no total for region {region_name!r}") from None


def _check_alpha(alpha: float) -> float:
    if not (isinstance(alpha, (int, float)) and 0.0 < alpha < 1.0):
        raise ValueError("alpha must lie strictly between 0 and 1")
    return float(alpha)


def _check_nonempty(draw: SampleDraw) -> None:
    if draw.n < 1:
        raise ValueError("the draw is empty")


def _check_source(draw: SampleDraw, kind: str, scope: Region | None) -> None:
    want = scope.name if scope is not None else None
    if draw.kind != kind or draw.source != want:
        raise ValueError(
            f"source mismatch: need a {kind!r} draw from "
            f"{want if want is not None else 'the whole domain'!r}, "
            f"got {draw.kind!r} from {draw.source!r}")


def _check_membership(draw: SampleDraw, region: Region | None) -> None:
    if region is None:
        return
    outside = draw.distinct - region.members
    if outside:
        raise ValueError(f"draw contains units outside region {region.name!r}: "
                         f"{sorted(outside)[:5]}")


def _sigma(weights: np.ndarray, center: float) -> float:
    dev = [(float(w) - center) ** 2 for w in weights]
    return math.sqrt(math.fsum(dev) / len(dev))


def _mean(values: np.ndarray) -> float:
    return math.fsum(values) / len(values)


def confidence_interval(value: float, alpha: float, scale: float, sigma: float,
                        n: int) -> tuple[float, float]:
    """Normal interval ``value +/- z_{alpha/2} * scale * sigma / sqrt(n)``."""
    alpha = _check_alpha(alpha)
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError("interval undefined: no draws in scope")
    if not (math.isfinite(scale) and scale > 0):
        raise ValueError("scale must be finite and > 0")
    if not (math.isfinite(sigma) and sigma >= 0):
        raise ValueError("sigma must be finite and >= 0")
    half = normal_quantile(alpha / 2.0) * scale * sigma / math.sqrt(n)
    return value - half, value + half


def sigma_hat(domain: Domain, scope: Region | None, draw_ids: Sequence[str],
              labels: LabelStore, estimate_value: float) -> float:
    """Spread of the in-scope importance weights around the scope mean.

    ``sqrt((1/n) sum (f/g - estimate_value/G_scope)^2)`` over the given
    draws; the center is the estimate expressed on the weight scale.
    """
    if len(draw_ids) == 0:
        raise ValueError("sigma undefined: no draws in scope")
    G_scope, _ = region_mass(domain, scope)
    f = labels.values_for(draw_ids)
    g = domain.g[domain.indices_for(draw_ids)]
    return _sigma(f / g, estimate_value / G_scope)


def _empty_estimate(method: str, alpha: float) -> Estimate:
    return Estimate(value=0.0, n_region=0, sigma_hat=0.0, ci_low=None, ci_high=None,
                    alpha=alpha, method=method, empty_region=True, variance_mode=None)


def estimate_mc(domain: Domain, region: Region | None, draw: SampleDraw,
                labels: LabelStore, alpha: float = 0.05) -> Estimate:
    """Uniform-draw count estimate: |S| times the mean labeled count.

    The draw must have been taken uniformly from the same region. The
    interval uses the population-style spread of the f values (a
    conventional choice, matching the rest of the family).
    """
    alpha = _check_alpha(alpha)
    _check_nonempty(draw)
    _check_source(draw, "uniform", region)
    _check_membership(draw, region)
    size = len(region.members) if region is not None else len(domain)
    f = labels.values_for(draw.ids)
    f_bar = _mean(f)
    value = size * f_bar
    sig = _sigma(f, f_bar)
    low, high = confidence_interval(value, alpha, size, sig, draw.n)
    return Estimate(value=value, n_region=draw.n, sigma_hat=sig, ci_low=low, ci_high=high,
                    alpha=alpha, method="MC", variance_mode="per-region")


def estimate_is(domain: Domain, region: Region | None, draw: SampleDraw,
                q: Mapping[str, float], labels: LabelStore, alpha: float = 0.05) -> Estimate:
    """Importance-sampling estimate under an explicit proposal.

    ``q`` maps every candidate unit of the region to its draw
    probability (must sum to 1 within 1e-10). A drawn unit with q = 0 and
    a positive label is unestimable and raises; q = 0 with f = 0
    contributes nothing.
    """
    alpha = _check_alpha(alpha)
    _check_nonempty(draw)
    _check_membership(draw, region)
    members = region.members if region is not None else set(domain.ids)
    extra = set(q) - set(members)
    if extra:
        raise ValueError(f"proposal assigns mass outside the region: {sorted(extra)[:5]}")
    total_q = math.fsum(float(v) for v in q.values())
    if abs(total_q - 1.0) > 1e-10:
        raise ValueError(f"proposal probabilities sum to {total_q!r}, not 1")

    f = labels.values_for(draw.ids)
    weights = np.empty(draw.n, dtype=np.float64)
    for i, unit_id in enumerate(draw.ids):
        qi = float(q.get(unit_id, 0.0))
        if qi < 0 or not math.isfinite(qi):
            raise ValueError(f"proposal probability for {unit_id!r} must be finite and >= 0")
        if qi == 0.0:
            if f[i] > 0:
                raise ValueError(
                    f"unit {unit_id!r} was drawn with proposal probability 0 but has a "
                    f"positive count")
            weights[i] = 0.0
        else:
            weights[i] = f[i] / qi
    value = _mean(weights)
    sig = _sigma(weights, value)
    low, high = confidence_interval(value, alpha, 1.0, sig, draw.n)
    return Estimate(value=value, n_region=draw.n, sigma_hat=sig, ci_low=low, ci_high=high,
                    alpha=alpha, method="IS", variance_mode="per-region")


def estimate_discount(domain: Domain, region: Region | None, draw: SampleDraw,
                      labels: LabelStore, alpha: float = 0.05) -> Estimate:
    """Detector-proportional estimate of one region from its own draws.

    ``G(S) * mean(f/g)`` over draws taken proportionally to g within the
    region. The factored form keeps the perfect-detector case (f = g)
    exact: every weight is exactly 1.
    """
    alpha = _check_alpha(alpha)
    _check_nonempty(draw)
    _check_source(draw, "proportional", region)
    _check_membership(draw, region)
    G_S, _ = region_mass(domain, region)
    f = labels.values_for(draw.ids)
    g = domain.g[domain.indices_for(draw.ids)]
    w = f / g
    w_bar = _mean(w)
    value = G_S * w_bar
    sig = _sigma(w, w_bar)
    low, high = confidence_interval(value, alpha, G_S, sig, draw.n)
    return Estimate(value=value, n_region=draw.n, sigma_hat=sig, ci_low=low, ci_high=high,
                    alpha=alpha, method="DIS", variance_mode="per-region")


def _prepare_regions(domain: Domain, regions: Sequence[Region]) -> list[Region]:
    regions = list(regions)
    if not regions:
        raise ValueError("at least one region is required")
    names = [r.name for r in regions]
    if len(set(names)) != len(names):
        raise ValueError("region names must be unique")
    return regions


def _resolve_mode(variance_mode: str, n_region: int) -> str:
    if variance_mode == "auto":
        return "pooled" if n_region < POOLED_SAMPLE_THRESHOLD else "per-region"
    return variance_mode


def _shared_draw_estimates(domain: Domain, regions: Sequence[Region], draw: SampleDraw,
                           weights: np.ndarray, offsets: Mapping[str, float] | None,
                           alpha: float, variance_mode: str, method: str) -> dict[str, Estimate]:
    """Per-region estimates from one whole-domain weighted batch."""
    if variance_mode not in _VARIANCE_MODES:
        raise ValueError(f"variance_mode must be one of {_VARIANCE_MODES}")
    positions = domain.indices_for(draw.ids)
    pooled_sig: float | None = None
    out: dict[str, Estimate] = {}
    for region in regions:
        member_mask = np.zeros(len(domain), dtype=bool)
        member_mask[region.member_indices(domain)] = True
        mask = member_mask[positions]
        n_region = int(mask.sum())
        if n_region == 0:
            out[region.name] = _empty_estimate(method, alpha)
            continue
        w_region = weights[mask]
        w_bar = _mean(w_region)
        G_S, _ = region_mass(domain, region)
        value = G_S * w_bar
        if offsets is not None:
            value += offsets[region.name]
        mode = _resolve_mode(variance_mode, n_region)
        if mode == "pooled":
            if pooled_sig is None:
                pooled_sig = _sigma(weights, _mean(weights))
            sig = pooled_sig
        else:
            sig = _sigma(w_region, w_bar)
        low, high = confidence_interval(value, alpha, G_S, sig, n_region)
        out[region.name] = Estimate(value=value, n_region=n_region, sigma_hat=sig,
                                    ci_low=low, ci_high=high, alpha=alpha, method=method,
                                    variance_mode=mode)
    return out


def estimate_kdiscount(domain: Domain, regions: Sequence[Region], draw: SampleDraw,
                       labels: LabelStore, alpha: float = 0.05,
                       variance_mode: str = "auto") -> dict[str, Estimate]:
    """All regions at once from one detector-proportional whole-domain batch.

    Each region is estimated from the draws that landed in it:
    ``G(S) * mean(f/g over draws in S)``, zero (flagged empty) if none
    did. Overlapping regions share draws. Under the default "auto"
    variance mode, regions with fewer than POOLED_SAMPLE_THRESHOLD draws
    use the pooled whole-domain weight spread for their interval.
    """
    alpha = _check_alpha(alpha)
    _check_nonempty(draw)
    _check_source(draw, "proportional", None)
    regions = _prepare_regions(domain, regions)
    f = labels.values_for(draw.ids)
    g = domain.g[domain.indices_for(draw.ids)]
    return _shared_draw_estimates(domain, regions, draw, f / g, None, alpha,
                                  variance_mode, "kDIS")


def estimate_kdiscount_cv(domain: Domain, regions: Sequence[Region], draw: SampleDraw,
                          labels: LabelStore, cv: ControlVariate, alpha: float = 0.05,
                          variance_mode: str = "auto") -> dict[str, Estimate]:
    """Shared-draw estimates with a control variate absorbed.

    Weights become ``(f - h)/g`` and each nonempty region gets its exact
    control total H(S) added back, so the estimate stays unbiased while
    the weight spread (and the interval) shrinks when h tracks f. Empty
    regions keep the value-0 convention.
    """
    alpha = _check_alpha(alpha)
    _check_nonempty(draw)
    _check_source(draw, "proportional", None)
    regions = _prepare_regions(domain, regions)
    offsets = {r.name: cv.total(r.name) for r in regions}
    f = labels.values_for(draw.ids)
    h = cv.h_for(draw.ids)
    g = domain.g[domain.indices_for(draw.ids)]
    return _shared_draw_estimates(domain, regions, draw, (f - h) / g, offsets, alpha,
                                  variance_mode, "kDIScv")


def debias(estimate: Estimate, p_S: float, n: int) -> Estimate:
    """Rescale a shared-draw estimate by its known conditional shrinkage.

    Dividing by ``u = 1 - (1-p_S)^n`` removes the empty-draw shrinkage
    unconditionally, at the price of inflating the conditional variance
    by 1/u^2; the interval endpoints scale with the point estimate.
    """
    if estimate.empty_region or estimate.n_region < 1:
        raise ValueError("cannot debias an empty-region estimate")
    if estimate.debiased:
        raise ValueError("estimate is already debiased")
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ValueError("n must be an integer >= 1")
    if not (isinstance(p_S, (int, float)) and math.isfinite(p_S) and 0.0 < p_S <= 1.0):
        raise ValueError("p_S must lie in (0, 1]")
    u = 1.0 - (1.0 - float(p_S)) ** n
    if u <= 0.0:
        raise ValueError("empty-draw probability is numerically 1; nothing to debias")
    return dataclasses.replace(
        estimate,
        value=estimate.value / u,
        ci_low=None if estimate.ci_low is None else estimate.ci_low / u,
        ci_high=None if estimate.ci_high is None else estimate.ci_high / u,
        debiased=True,
    )


def weight_table(domain: Domain, draw: SampleDraw, labels: LabelStore,
                 cv: ControlVariate | None = None) -> list[Weight]:
    """Per-draw importance weights, in draw order."""
    f = labels.values_for(draw.ids)
    g = domain.g[domain.indices_for(draw.ids)]
    if cv is not None:
        w = (f - cv.h_for(draw.ids)) / g
    else:
        w = f / g
    return [Weight(unit_id, float(wi)) for unit_id, wi in zip(draw.ids, w)]
