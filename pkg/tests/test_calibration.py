import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import brute_monotone_fit
from screencount import (ControlVariate, Domain, IsotonicModel, LabelStore, Region,
                         RandomStream, Unit, build_control_variate, estimate_calibrated,
                         estimate_kdiscount, estimate_kdiscount_cv, fit_isotonic,
                         predict, sample_proportional)

label_values = st.floats(0.0, 100.0, allow_nan=False, allow_infinity=False)


def domain_of(g, ids=None):
    ids = ids or [chr(ord("a") + i) for i in range(len(g))]
    return Domain([Unit(i, float(v)) for i, v in zip(ids, g)], epsilon=0.0)


class TestFit:
    def test_already_monotone_is_identity(self):
        model = fit_isotonic([(1, 1), (2, 2), (3, 3)])
        assert model.x == (1.0, 2.0, 3.0)
        assert model.y == (1.0, 2.0, 3.0)

    def test_three_point_violation_pools(self):
        model = fit_isotonic([(1, 3), (2, 2), (3, 4)])
        assert model.y == (2.5, 2.5, 4.0)

    def test_single_pair_constant(self):
        model = fit_isotonic([(5, 7)])
        assert model.x == (5.0,) and model.y == (7.0,)
        assert float(model.predict(0.0)) == 7.0
        assert float(model.predict(100.0)) == 7.0

    def test_input_order_irrelevant(self):
        a = fit_isotonic([(3, 4), (1, 3), (2, 2)])
        b = fit_isotonic([(1, 3), (2, 2), (3, 4)])
        assert a == b

    def test_duplicate_detector_counts_preaveraged(self):
        # both pairs at g=2 average to 3 before pooling
        model = fit_isotonic([(1, 1), (2, 2), (2, 4), (3, 5)])
        assert model.x == (1.0, 2.0, 3.0)
        assert model.y == (1.0, 3.0, 5.0)

    def test_duplicate_average_can_still_violate(self):
        model = fit_isotonic([(1, 5), (2, 1), (2, 3)])
        assert model.x == (1.0, 2.0)
        # block means: 5 vs 2, pooled with weights 1 and 2 -> 3 everywhere
        assert model.y == (3.0, 3.0)

    def test_empty_input_rejected(self):
        with pytest.raises(ValueError):
            fit_isotonic([])

    def test_invalid_pairs_rejected(self):
        with pytest.raises(ValueError):
            fit_isotonic([(1.0, float("nan"))])
        with pytest.raises(ValueError):
            fit_isotonic([(1.0, -2.0)])

    def test_matches_brute_force_projection(self):
        rng = np.random.default_rng(13)
        for _ in range(40):
            n = int(rng.integers(1, 7))
            f = rng.uniform(0.0, 10.0, n).round(3)
            model = fit_isotonic(list(zip(range(n), f)))
            assert list(model.y) == pytest.approx(brute_monotone_fit(f), abs=1e-8)

    @given(st.lists(label_values, min_size=1, max_size=12))
    def test_mean_preserved(self, f):
        model = fit_isotonic(list(zip(range(len(f)), f)))
        assert math.fsum(model.y) / len(f) == pytest.approx(
            math.fsum(f) / len(f), rel=1e-10, abs=1e-10)

    @given(st.lists(label_values, min_size=1, max_size=12))
    def test_fit_is_monotone_and_idempotent(self, f):
        model = fit_isotonic(list(zip(range(len(f)), f)))
        assert all(b >= a for a, b in zip(model.y, model.y[1:]))
        again = fit_isotonic(list(zip(model.x, model.y)))
        assert list(again.y) == pytest.approx(list(model.y), rel=1e-12, abs=1e-12)


class TestPredict:
    def model(self):
        return fit_isotonic([(1, 2), (3, 6)])

    def test_breakpoints_exact(self):
        model = self.model()
        assert float(model.predict(1.0)) == 2.0
        assert float(model.predict(3.0)) == 6.0

    def test_midpoint_interpolates(self):
        assert float(self.model().predict(2.0)) == 4.0

    def test_clamps_outside_range(self):
        model = self.model()
        assert float(model.predict(0.0)) == 2.0
        assert float(model.predict(50.0)) == 6.0

    def test_vectorized_queries(self):
        out = self.model().predict(np.array([0.0, 1.0, 2.0, 3.0, 9.0]))
        assert out.tolist() == [2.0, 2.0, 4.0, 6.0, 6.0]

    def test_module_alias(self):
        assert float(predict(self.model(), 2.0)) == 4.0

    @given(st.lists(label_values, min_size=1, max_size=10),
           st.lists(st.floats(-5.0, 25.0, allow_nan=False), min_size=2, max_size=20))
    def test_monotone_over_ascending_queries(self, f, queries):
        model = fit_isotonic(list(zip(range(len(f)), f)))
        out = model.predict(np.array(sorted(queries)))
        assert all(b >= a + -1e-12 for a, b in zip(out, out[1:]))


class TestCalibratedEstimate:
    def test_identity_model_recovers_mass(self):
        domain = domain_of([1.0, 2.0, 3.0])
        model = fit_isotonic([(1, 1), (2, 2), (3, 3)])
        S = Region("S", frozenset({"a", "c"}))
        est = estimate_calibrated(domain, S, model)
        assert est.value == 4.0
        assert est.method == "CAL"
        assert est.ci_low is None and est.ci_high is None and est.n_region == 0

    def test_constant_model_counts_units(self):
        domain = domain_of([5.0, 9.0, 2.0])
        model = fit_isotonic([(5, 7)])
        est = estimate_calibrated(domain, None, model)
        assert est.value == 21.0

    def test_sums_three_predictions(self):
        domain = domain_of([1.0, 2.0, 3.0])
        model = fit_isotonic([(1, 3), (2, 2), (3, 4)])
        est = estimate_calibrated(domain, None, model)
        assert est.value == pytest.approx(2.5 + 2.5 + 4.0, rel=1e-15)


class TestControlVariateBuild:
    def test_identity_model_gives_detector_totals(self):
        domain = domain_of([1.0, 2.0, 3.0])
        model = fit_isotonic([(1, 1), (2, 2), (3, 3)])
        S = Region("S", frozenset({"a", "b"}))
        cv = build_control_variate(model, domain, [S])
        assert cv.total("S") == 3.0

    def test_zero_model_reduces_to_plain_estimator(self):
        domain = domain_of([1.0, 2.0, 1.0])
        labels = LabelStore({"a": 2.0, "b": 2.0, "c": 0.0})
        model = IsotonicModel(x=(1.0,), y=(0.0,))
        S = Region("S", frozenset({"a", "b"}))
        cv = build_control_variate(model, domain, [S])
        draw = sample_proportional(domain, None, 7, RandomStream(23))
        plain = estimate_kdiscount(domain, [S], draw, labels)["S"]
        reduced = estimate_kdiscount_cv(domain, [S], draw, labels, cv)["S"]
        assert reduced.value == plain.value

    def test_partition_totals_additive(self):
        domain = domain_of([1.0, 2.0, 3.0, 4.0])
        model = fit_isotonic([(1, 2), (4, 5)])
        parts = [Region("p0", frozenset({"a", "b"})),
                 Region("p1", frozenset({"c", "d"})),
                 Region("all", frozenset(domain.ids))]
        cv = build_control_variate(model, domain, parts)
        assert cv.total("p0") + cv.total("p1") == pytest.approx(
            cv.total("all"), rel=1e-12)


class TestSerialization:
    def test_json_round_trip(self):
        model = fit_isotonic([(1, 3), (2, 2), (3, 4)])
        wire = json.loads(json.dumps(model.to_dict()))
        assert IsotonicModel.from_dict(wire) == model

    def test_invalid_models_rejected(self):
        with pytest.raises(ValueError):
            IsotonicModel(x=(), y=())
        with pytest.raises(ValueError):
            IsotonicModel(x=(1.0, 1.0), y=(1.0, 2.0))
        with pytest.raises(ValueError):
            IsotonicModel(x=(1.0, 2.0), y=(2.0, 1.0))
