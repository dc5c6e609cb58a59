import numpy as np
import pytest
from fixtures import pair, metric, six_point, random_ultrametric

from ultragap.utils import DomainError
from ultragap.metric import NoNonzeroDistanceError, distance_matrix
from ultragap.oracle import gammas, polish, gap_oracle, project_rows, sample_signs, sample_weights
from ultragap.solver import gap
from ultragap.simplex import gamma_quadratic


def test_pair(pair):
    result = gap_oracle(pair, 2, trials=100)
    assert result.value == pytest.approx(1.0)
    assert result.witness.omega == pytest.approx((1.0, -1.0))


def test_six_point(six_point):
    result = gap_oracle(six_point, 1, trials=100_000, seed=3)
    assert result.value == pytest.approx(23 / 60, abs=1e-6)
    assert result.value >= 23 / 60 - 1e-12
    assert result.patterns_polished == 31
    assert gamma_quadratic(six_point, 1, result.witness) == pytest.approx(result.value, abs=1e-12)


def test_unpolished_is_an_upper_bound(six_point):
    result = gap_oracle(six_point, 2, trials=2_000, polish_patterns=0)
    assert result.patterns_polished == 0
    assert result.value >= 13 / 32 - 1e-12


def test_random_ultrametrics():
    rng = np.random.default_rng(4)
    for _ in range(50):
        n = int(rng.integers(2, 9))
        m = metric(random_ultrametric(rng, n, integral=True))
        exact = gap(m, 1).value
        found = gap_oracle(m, 1, trials=100_000, seed=int(rng.integers(0, 1000))).value
        assert found >= exact - 1e-9
        assert found == pytest.approx(exact, abs=1e-6)


def test_deterministic_by_seed(six_point):
    a = gap_oracle(six_point, 1.5, trials=5_000, seed=11)
    b = gap_oracle(six_point, 1.5, trials=5_000, seed=11)
    assert a.value == b.value
    assert a.witness == b.witness
    assert a.seed == 11


@pytest.mark.parametrize("trials", [0, -5])
def test_trials_domain(six_point, trials):
    with pytest.raises(DomainError):
        gap_oracle(six_point, 1, trials=trials)


def test_single_point():
    with pytest.raises(NoNonzeroDistanceError):
        gap_oracle(metric([[0]]), 1, trials=10)


def test_sample_signs():
    rng = np.random.default_rng(0)
    for n in (2, 3, 9):
        signs = sample_signs(rng, 1000, n)
        assert signs.shape == (1000, n)
        assert signs[:, 0].all()
        assert (~signs).any(axis=1).all()


def test_sample_weights():
    rng = np.random.default_rng(0)
    signs = sample_signs(rng, 500, 6)
    omegas = sample_weights(rng, signs)
    np.testing.assert_allclose(np.where(omegas > 0, omegas, 0).sum(axis=1), 1.0)
    np.testing.assert_allclose(np.where(omegas < 0, omegas, 0).sum(axis=1), -1.0)
    assert (omegas[signs] >= 0).all()
    assert (omegas[~signs] <= 0).all()


def test_project_rows():
    v = np.array([[0.5, 0.5, 3.0], [2.0, 0.0, 0.0], [0.2, 0.2, 0.2]])
    mask = np.array([[True, True, False], [True, True, True], [True, True, True]])
    projected = project_rows(v, mask)
    np.testing.assert_allclose(projected[0], [0.5, 0.5, 0.0])
    np.testing.assert_allclose(projected[1], [1.0, 0.0, 0.0])
    np.testing.assert_allclose(projected[2], [1 / 3, 1 / 3, 1 / 3])


def test_polish_does_not_increase(six_point):
    rng = np.random.default_rng(1)
    d = distance_matrix(six_point, 1)
    starts = sample_weights(rng, sample_signs(rng, 64, 6))
    polished = polish(d, starts, starts > 0)
    assert (gammas(d, polished) <= gammas(d, starts) + 1e-12).all()
