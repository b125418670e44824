"""Monotone recalibration of detector counts against verified labels.

A handful of labeled (detector count, true count) pairs is enough to fit
a nondecreasing map from detector output to expected truth. The fit is
the classic pool-adjacent-violators reduction: the unique least-squares
projection onto the monotone cone. Prediction interpolates linearly
between fitted breakpoints and clamps to the fitted range outside it.

The fitted map serves two roles: summing its predictions over a region
gives a cheap deterministic count estimate, and handing those per-unit
predictions to the control-variate estimator removes the predictable part
of the sampling noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .domain import Domain, Region
from .estimators import ControlVariate, Estimate

__all__ = [
    "IsotonicModel",
    "fit_isotonic",
    "predict",
    "estimate_calibrated",
    "build_control_variate",
]


@dataclass(frozen=True)
class IsotonicModel:
    """Nondecreasing piecewise-linear map fitted to labeled pairs.

    ``x`` holds the distinct detector counts in ascending order and ``y``
    the fitted values at each (nondecreasing by construction).
    """

    x: tuple[float, ...]
    y: tuple[float, ...]

    def __post_init__(self):
        if not self.x or len(self.x) != len(self.y):
            raise ValueError("model needs matching, non-empty breakpoint arrays")
        if any(b <= a for a, b in zip(self.x, self.x[1:])):
            raise ValueError("breakpoint locations must be strictly increasing")
        if any(b < a for a, b in zip(self.y, self.y[1:])):
            raise ValueError("fitted values must be nondecreasing")

    def predict(self, g):
        """Fitted value at g: linear between breakpoints, clamped outside."""
        return np.interp(g, self.x, self.y)

    def to_dict(self) -> dict:
        return {"x": list(self.x), "y": list(self.y)}

    @classmethod
    def from_dict(cls, d: Mapping) -> "IsotonicModel":
        return cls(x=tuple(float(v) for v in d["x"]), y=tuple(float(v) for v in d["y"]))


def fit_isotonic(pairs: Iterable[tuple[float, float]]) -> IsotonicModel:
    """Least-squares nondecreasing fit of true counts against detector counts.

    Pairs sharing a detector count are pre-averaged (with multiplicity as
    weight), then adjacent violators are pooled until the block means are
    nondecreasing. A single distinct count yields a constant map.
    """
    cleaned = []
    for g, f in pairs:
        g, f = float(g), float(f)
        if not (math.isfinite(g) and math.isfinite(f)):
            raise ValueError("calibration pairs must be finite")
        if f < 0:
            raise ValueError("true counts must be >= 0")
        cleaned.append((g, f))
    if not cleaned:
        raise ValueError("at least one calibration pair is required")

    cleaned.sort(key=lambda p: p[0])
    xs: list[float] = []
    weights: list[int] = []
    sums: list[float] = []
    for g, f in cleaned:
        if xs and g == xs[-1]:
            weights[-1] += 1
            sums[-1] += f
        else:
            xs.append(g)
            weights.append(1)
            sums.append(f)

    # Blocks carry (weight, total); pooling two blocks is exact addition,
    # means are formed only when comparing or emitting.
    blocks: list[tuple[float, float, int]] = []  # (weight, total, n_points)
    for w, s in zip(weights, sums):
        blocks.append((float(w), s, 1))
        while len(blocks) > 1 and blocks[-2][1] / blocks[-2][0] > blocks[-1][1] / blocks[-1][0]:
            w2, s2, c2 = blocks.pop()
            w1, s1, c1 = blocks.pop()
            blocks.append((w1 + w2, s1 + s2, c1 + c2))

    fitted: list[float] = []
    for w, s, c in blocks:
        fitted.extend([s / w] * c)
    return IsotonicModel(x=tuple(xs), y=tuple(fitted))


def predict(model: IsotonicModel, g):
    """Module-level alias for :meth:`IsotonicModel.predict`."""
    return model.predict(g)


def estimate_calibrated(domain: Domain, region: Region | None, model: IsotonicModel,
                        alpha: float = 0.05) -> Estimate:
    """Sum of calibrated detector counts over a region.

    Deterministic given the model, so there is no interval; n_region is 0
    because no draws back the number.
    """
    if region is None:
        g = domain.g
    else:
        g = domain.g[region.member_indices(domain)]
    value = math.fsum(model.predict(g))
    return Estimate(value=value, n_region=0, sigma_hat=0.0, ci_low=None, ci_high=None,
                    alpha=alpha, method="CAL", empty_region=False, variance_mode=None)


def build_control_variate(model: IsotonicModel, domain: Domain,
                          regions: Sequence[Region]) -> ControlVariate:
    """Calibrated counts as a control variate: h = model(g), exact totals."""
    values = model.predict(domain.g)
    h = {unit_id: float(v) for unit_id, v in zip(domain.ids, values)}
    return ControlVariate(h, domain, regions)
