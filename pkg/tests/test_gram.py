import numpy as np
import pytest

from src.errors import DimensionError, LinearDependenceError, ParameterError
from src.haar.sampling import sample_orthogonal
from src.linalg.gram import (
    GramData,
    diagonal_example_family,
    diagonal_example_gram,
    gram_matrix,
    gram_schmidt_hs,
    mix_reduction,
)
from src.linalg.matrices import hs_inner


def test_diagonal_family_gram_closed_form():
    a, n = [2, 5, 10], 10
    data = gram_matrix(diagonal_example_family(a, n))
    assert data.scale == 10
    assert data.is_normalized()
    assert np.allclose(data.gram, diagonal_example_gram(a, n), atol=1e-12)
    assert data.gram[0, 2] == pytest.approx(10 * np.sqrt(0.2))


@pytest.mark.parametrize("a,n", [([3, 2, 5], 5), ([1, 2, 4], 5), ([0, 5], 5), ([2.5, 5, 10], 10)])
def test_diagonal_family_rejects_bad_sequences(a, n):
    with pytest.raises(ParameterError):
        diagonal_example_family(a, n)


def test_diagonal_gram_rejects_fractional_sizes():
    with pytest.raises(ParameterError):
        diagonal_example_gram([2.5, 5, 10], 10)


def test_gram_schmidt_orthonormalizes_and_factors(rng):
    n = 6
    family = [rng.standard_normal((n, n)) for _ in range(3)]
    target = np.sqrt(n)
    ortho, d = gram_schmidt_hs(family, target)
    for i, a in enumerate(ortho):
        for j, b in enumerate(ortho):
            assert hs_inner(a, b) == pytest.approx(n if i == j else 0.0, abs=1e-10)
    gram = gram_matrix(family).gram
    assert np.allclose(d @ d.T, gram / target ** 2, atol=1e-10)
    assert np.allclose(np.triu(d, 1), 0.0)


def test_gram_schmidt_complex_family(rng):
    n = 4
    family = [rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)) for _ in range(2)]
    ortho, d = gram_schmidt_hs(family, 2.0)
    assert abs(hs_inner(ortho[0], ortho[1])) < 1e-10
    assert np.allclose(d @ d.conj().T, gram_matrix(family).gram / 4.0, atol=1e-10)


def test_gram_schmidt_reports_dependent_index():
    a = np.diag([1.0, 2.0, 3.0])
    with pytest.raises(LinearDependenceError) as err:
        gram_schmidt_hs([a, np.eye(3), 2 * a], 1.0)
    assert err.value.index == 2


def test_mix_reduction_is_samplewise(rng):
    n = 5
    family = [rng.standard_normal((n, n)) for _ in range(3)]
    ortho, d = mix_reduction(family)
    m = sample_orthogonal(n, rng)
    x_b = np.array([np.trace(b @ m) for b in family])
    x_a = np.array([np.trace(a @ m) for a in ortho])
    assert np.allclose(x_b, d @ x_a, atol=1e-10)
    assert np.allclose(d @ d.T, gram_matrix(family).covariance, atol=1e-10)


def test_gram_data_rejects_asymmetric():
    with pytest.raises(DimensionError):
        GramData(k=2, gram=np.array([[1.0, 2.0], [0.0, 1.0]]), scale=2.0)
