import numpy as np
import pytest
from fixtures import path, metric, six_point, discrete_matrix

from ultragap.utils import DomainError
from ultragap.verify import enhanced_lhs, verify_enhanced
from ultragap.metric import scale, distance_matrix
from ultragap.asymptote import theta


def test_six_point_holds_near_the_limit(six_point):
    verdict = verify_enhanced(six_point, 0.4, 20)
    assert verdict.holds
    assert verdict.witness is None
    assert verdict.threshold == pytest.approx(0.4)
    assert verdict.max_sampled_lhs <= 1e-9


def test_six_point_fails_at_one(six_point):
    verdict = verify_enhanced(six_point, 0.4, 1)
    assert not verdict.holds
    assert verdict.gap == pytest.approx(23 / 60)
    assert verdict.witness is not None


def test_threshold_scales_with_alpha(six_point):
    verdict = verify_enhanced(scale(six_point, 3), 0.4, 2)
    assert verdict.alpha == pytest.approx(3.0)
    assert verdict.threshold == pytest.approx(3.6)
    assert verdict.holds == (0.4 <= 13 / 32)


@pytest.mark.parametrize("n", [2, 3, 6, 7])
def test_discrete_at_theta(n):
    verdict = verify_enhanced(metric(discrete_matrix(n)), float(theta(n)), 0)
    assert verdict.holds
    assert not verify_enhanced(metric(discrete_matrix(n)), float(theta(n)) + 1e-3, 0).holds


def test_zero_constant_is_negative_type(path):
    assert verify_enhanced(path, 0, 1).holds


def test_path_fails_without_negative_type(path):
    verdict = verify_enhanced(path, 0, 3)
    assert not verdict.holds
    assert verdict.gap < 0
    assert verdict.witness is not None


def test_no_samples(six_point):
    verdict = verify_enhanced(six_point, 0.1, 1, samples=0)
    assert verdict.holds
    assert verdict.max_sampled_lhs is None


@pytest.mark.parametrize("G, samples", [(-0.1, 10), (0.1, -1)])
def test_domain(six_point, G, samples):
    with pytest.raises(DomainError):
        verify_enhanced(six_point, G, 1, samples=samples)


def test_enhanced_lhs():
    d = distance_matrix(metric([[0, 1], [1, 0]]), 1)
    zetas = np.array([[1.0, -1.0], [0.5, -0.5]])
    # 2 * threshold - 2 for the first row, a quarter of that for the second
    np.testing.assert_allclose(enhanced_lhs(d, 1.0, zetas), [0.0, 0.0])
    np.testing.assert_allclose(enhanced_lhs(d, 0.5, zetas), [-1.0, -0.25])
