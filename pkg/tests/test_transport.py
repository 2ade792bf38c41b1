import itertools
import math

import numpy as np
import pytest

from src.bounds import bound_mix
from src.errors import DimensionError, ParameterError, SizeError
from src.pairs import (
    iid_law,
    make_iid_sum_pair,
    make_orthogonal_projection_pair,
    make_unitary_projection_pair,
    random_family,
)
from src.transport import (
    SampleCloud,
    compare_to_bound,
    gaussian_cloud,
    gaussian_sampler,
    model_cloud,
    model_sampler,
    self_distance,
    target_sampler,
    w1_exact,
    w1_sliced_lb,
)


def _cloud(points):
    return SampleCloud(points=np.asarray(points, dtype=float))


# --- Clouds ---

def test_cloud_validation():
    with pytest.raises(ParameterError):
        _cloud([[0.0, 1.0]])
    with pytest.raises(ParameterError):
        _cloud([[0.0, np.inf], [1.0, 1.0]])
    with pytest.raises(DimensionError):
        _cloud([1.0, 2.0, 3.0])


def test_cloud_csv_round_trip(rng):
    cloud = gaussian_cloud(5, 3, rng)
    again = SampleCloud.from_csv(cloud.to_csv())
    assert np.array_equal(again.points, cloud.points)
    assert len(cloud.to_csv().strip().splitlines()) == 5


def test_cloud_csv_rejects_garbage():
    with pytest.raises(ParameterError):
        SampleCloud.from_csv("1,2\nx,3\n")


def test_gaussian_sampler_covariance(rng):
    cov = np.array([[2.0, 0.5], [0.5, 1.0]])
    points = gaussian_sampler(2, cov)(rng, 100_000)
    assert np.allclose(np.cov(points.T), cov, atol=0.05)
    with pytest.raises(DimensionError):
        gaussian_sampler(3, cov)


def test_model_clouds_have_model_dimension(rng):
    cloud = model_cloud(make_iid_sum_pair(iid_law("rademacher", 2), 10), 50, rng)
    assert (cloud.m, cloud.k) == (50, 2)
    unitary = make_unitary_projection_pair(random_family(2, 5, rng, complex_valued=True))
    assert model_sampler(unitary)(rng, 7).shape == (7, 4)
    assert target_sampler(unitary)(rng, 20_000).var(axis=0) == pytest.approx(np.full(4, 0.5), abs=0.03)


# --- Exact W1 ---

def test_w1_trivial_cases():
    a = _cloud([[0.0, 0.0], [1.0, 2.0], [3.0, -1.0]])
    assert w1_exact(a, a) == 0.0
    p, q = _cloud([[0.0, 0.0], [0.0, 0.0]]), _cloud([[3.0, 4.0], [3.0, 4.0]])
    assert w1_exact(p, q) == pytest.approx(5.0)


def test_w1_matches_brute_force(rng):
    for _ in range(5):
        a, b = rng.standard_normal((3, 2)), rng.standard_normal((3, 2))
        brute = min(
            np.mean(np.linalg.norm(a - b[list(perm)], axis=1)) for perm in itertools.permutations(range(3))
        )
        assert w1_exact(_cloud(a), _cloud(b)) == pytest.approx(brute, abs=1e-12)


def test_w1_is_a_metric(rng):
    clouds = [gaussian_cloud(40, 2, rng) for _ in range(3)]
    a, b, c = clouds
    assert w1_exact(a, b) == w1_exact(b, a)
    assert w1_exact(a, c) <= w1_exact(a, b) + w1_exact(b, c) + 1e-12


def test_w1_errors(rng):
    with pytest.raises(DimensionError):
        w1_exact(gaussian_cloud(4, 2, rng), gaussian_cloud(5, 2, rng))
    with pytest.raises(DimensionError):
        w1_exact(gaussian_cloud(4, 2, rng), gaussian_cloud(4, 3, rng))
    big = gaussian_cloud(4097, 1, rng)
    with pytest.raises(SizeError):
        w1_exact(big, big)


# --- Sliced lower bound ---

def test_sliced_trivial_and_one_dimensional(rng):
    a = gaussian_cloud(30, 2, rng)
    assert w1_sliced_lb(a, a, 10, rng) == 0.0
    x, y = gaussian_cloud(25, 1, rng), gaussian_cloud(25, 1, rng)
    assert w1_sliced_lb(x, y, 3, rng) == pytest.approx(w1_exact(x, y), abs=1e-12)
    with pytest.raises(ParameterError):
        w1_sliced_lb(a, a, 0, rng)


@pytest.mark.parametrize("m", [10, 100, 512])
def test_sliced_is_a_lower_bound(m, rng):
    a, b = gaussian_cloud(m, 3, rng), gaussian_cloud(m, 3, rng)
    assert w1_sliced_lb(a, b, 50, rng) <= w1_exact(a, b) + 1e-12


# --- Self distance ---

def test_self_distance_of_point_mass():
    mean, se = self_distance(lambda rng, m: np.zeros((m, 2)), 20, 3, 0)
    assert mean == 0.0 and se == 0.0


def test_self_distance_requires_reps():
    with pytest.raises(ParameterError):
        self_distance(gaussian_sampler(2), 10, 2, 0)


def test_self_distance_decreases_with_m():
    small, _ = self_distance(gaussian_sampler(2), 500, 4, 1)
    large, _ = self_distance(gaussian_sampler(2), 2000, 4, 2)
    assert 0 < large < 0.75 * small


def test_self_distance_se_shrinks_with_reps():
    few = np.mean([self_distance(gaussian_sampler(2), 200, 3, seed)[1] for seed in range(8)])
    _, many = self_distance(gaussian_sampler(2), 200, 12, 100)
    assert many < few


def test_self_distance_reproducible_with_threads():
    first = self_distance(gaussian_sampler(2), 100, 6, 9, threads=2)
    second = self_distance(gaussian_sampler(2), 100, 6, 9, threads=2)
    assert first == second


# --- Comparisons ---

def test_compare_gaussian_against_itself_passes(rng):
    row = compare_to_bound(gaussian_cloud(300, 2, rng), gaussian_sampler(2), 0.0, 4, 3, directions=20)
    assert row.passed and row.sliced_passed
    assert row.csv_row()[-1] == "true"
    assert row.sliced_lb <= row.w1 + 1e-12


def test_compare_detects_shifted_law(rng):
    shifted = SampleCloud(points=gaussian_cloud(300, 2, rng).points + 1.0)
    row = compare_to_bound(shifted, gaussian_sampler(2), 0.01, 4, 3)
    assert not row.passed


@pytest.mark.slow
def test_orthogonal_projection_within_bound(rng):
    n, k, m = 100, 2, 2000
    model = make_orthogonal_projection_pair(random_family(k, n, rng))
    bound = bound_mix(k, n, n * np.eye(k)).value
    assert bound == pytest.approx(math.sqrt(2) * 2 / 99)
    row = compare_to_bound(model_cloud(model, m, rng), target_sampler(model), bound, 4, 11, directions=64)
    assert row.passed
    assert row.sliced_passed
