"""Set-membership filtering: predict, fuse, margins, and containment."""
import numpy as np
import pytest

from voroproj.errors import InconsistentMeasurementError
from voroproj.estimation import (
    EstimateBank,
    Measurement,
    apply_margin,
    fuse,
    predict,
)
from voroproj.geometry import Ellipsoid


def noise_ball(dim, radius):
    return Ellipsoid.ball(np.zeros(dim), radius)


class TestMeasurement:
    def test_off_center_noise_bound_rejected(self):
        with pytest.raises(ValueError):
            Measurement(1, [0.0, 0.0], Ellipsoid.ball([1.0, 0.0], 0.1))

    def test_as_ellipsoid_translates(self):
        m = Measurement(1, [2.0, 3.0], noise_ball(2, 0.5))
        e = m.as_ellipsoid()
        assert np.allclose(e.center, [2.0, 3.0])
        assert np.allclose(e.shape, 0.25 * np.eye(2))


class TestPredict:
    def test_support_grows_by_motion_bound(self):
        rng = np.random.default_rng(0)
        e = Ellipsoid([1.0, -2.0], [[1.0, 0.2], [0.2, 0.5]])
        out = predict(e, 0.3)
        for _ in range(50):
            d = rng.standard_normal(2)
            d /= np.linalg.norm(d)
            assert out.support(d) >= e.support(d) + 0.3 - 1e-9

    def test_zero_bound_identity(self):
        e = Ellipsoid.ball([0.0, 0.0], 1.0)
        assert predict(e, 0.0) is e

    def test_negative_bound_rejected(self):
        with pytest.raises(ValueError):
            predict(Ellipsoid.ball([0.0, 0.0], 1.0), -0.1)


class TestFuse:
    def test_contains_intersection(self):
        rng = np.random.default_rng(1)
        prior = Ellipsoid([0.0, 0.0], [[2.0, 0.4], [0.4, 1.0]])
        meas = Measurement(1, [0.8, 0.2], noise_ball(2, 0.9))
        fused = fuse(prior, meas)
        meas_set = meas.as_ellipsoid()
        pts = prior.sample(rng, size=2000)
        both = [p for p in pts if meas_set.membership(p)]
        assert both, "sampling produced no intersection points"
        for p in both:
            assert fused.quadratic_form(p) <= 1.0 + 1e-9

    def test_shrinks_loose_prior(self):
        prior = Ellipsoid.ball([0.0, 0.0], 5.0)
        meas = Measurement(1, [0.5, 0.0], noise_ball(2, 0.2))
        fused = fuse(prior, meas)
        assert np.trace(fused.shape) <= np.trace(meas.as_ellipsoid().shape) + 1e-9

    def test_empty_intersection_raises(self):
        prior = Ellipsoid.ball([0.0, 0.0], 1.0)
        meas = Measurement(1, [10.0, 0.0], noise_ball(2, 1.0))
        with pytest.raises(InconsistentMeasurementError):
            fuse(prior, meas)

    def test_dimension_mismatch(self):
        prior = Ellipsoid.ball(np.zeros(3), 1.0)
        meas = Measurement(1, [0.0, 0.0], noise_ball(2, 1.0))
        with pytest.raises(Exception):
            fuse(prior, meas)


class TestApplyMargin:
    def test_support_dominance(self):
        rng = np.random.default_rng(2)
        e = Ellipsoid([1.0, 2.0], np.diag([0.25, 1.0]))
        margin = Ellipsoid(np.zeros(2), np.diag([0.09, 0.09]))
        out = apply_margin(e, margin)
        for _ in range(50):
            d = rng.standard_normal(2)
            d /= np.linalg.norm(d)
            assert out.support(d) >= e.support(d) + margin.support(d) - 1e-9

    def test_off_center_margin_rejected(self):
        e = Ellipsoid.ball(np.zeros(2), 1.0)
        with pytest.raises(ValueError):
            apply_margin(e, Ellipsoid.ball([1.0, 0.0], 0.1))


class TestEstimateBank:
    def test_first_contact_seeds_from_measurement(self):
        bank = EstimateBank(owner=0, margin=Ellipsoid.ball(np.zeros(2), 0.1))
        est = bank.update(Measurement(1, [3.0, 0.0], noise_ball(2, 0.5)), 0.1)
        assert np.allclose(est.center, [3.0, 0.0])
        assert 1 in bank.estimates

    def test_self_estimate_rejected(self):
        bank = EstimateBank(owner=0, margin=Ellipsoid.ball(np.zeros(2), 0.1))
        with pytest.raises(ValueError):
            bank.update(Measurement(0, [0.0, 0.0], noise_ball(2, 0.5)), 0.1)

    def test_coast_inflates(self):
        bank = EstimateBank(owner=0, margin=Ellipsoid.ball(np.zeros(2), 0.1))
        bank.update(Measurement(1, [3.0, 0.0], noise_ball(2, 0.5)), 0.1)
        before = np.trace(bank.estimates[1].shape)
        bank.coast(1, 0.2)
        after = np.trace(bank.estimates[1].shape)
        assert after > before

    def test_coast_unknown_subject_is_noop(self):
        bank = EstimateBank(owner=0, margin=Ellipsoid.ball(np.zeros(2), 0.1))
        bank.coast(7, 0.2)
        assert not bank.estimates


class TestContainment:
    def test_random_walk_containment(self):
        # True position does a bounded random walk; the filtered estimate
        # must contain it at every step under uniform-in-bound noise.
        rng = np.random.default_rng(9)
        bound = 0.05
        noise = noise_ball(2, 0.1)
        bank = EstimateBank(owner=0, margin=Ellipsoid.ball(np.zeros(2), 0.1))
        true = np.array([1.0, -1.0])
        for step in range(500):
            direction = rng.standard_normal(2)
            direction /= np.linalg.norm(direction)
            true = true + direction * rng.uniform(0.0, bound)
            meas = Measurement(1, true + noise.sample(rng), noise)
            est = bank.update(meas, bound)
            assert est.quadratic_form(true) <= 1.0 + 1e-9, f"violated at step {step}"
