# src/haar/sampling.py
import logging

import numpy as np

from src.errors import ParameterError
from src.linalg.matrices import ComplexMatrix, RealMatrix, qr_decompose

logger = logging.getLogger(__name__)


def _ginibre(shape, rng: np.random.Generator, complex_entries: bool) -> np.ndarray:
    if complex_entries:
        return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    return rng.standard_normal(shape)


def _check_dim(n: int) -> None:
    if n < 1:
        raise ParameterError(f"Dimension must be at least 1, got {n}")


def sample_orthogonal(n: int, rng: np.random.Generator) -> RealMatrix:
    """Haar-distributed element of O(n): Q factor of a Ginibre matrix, R with positive diagonal."""
    _check_dim(n)
    q, _ = qr_decompose(_ginibre((n, n), rng, complex_entries=False))
    return q


def sample_unitary(n: int, rng: np.random.Generator) -> ComplexMatrix:
    _check_dim(n)
    q, _ = qr_decompose(_ginibre((n, n), rng, complex_entries=True))
    return q


def _batched_q(z: np.ndarray) -> np.ndarray:
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    phases = diag / np.abs(diag)
    return q * phases[..., np.newaxis, :]


def sample_orthogonal_batch(n: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """``size`` independent Haar orthogonal matrices, shape (size, n, n)."""
    _check_dim(n)
    return _batched_q(_ginibre((size, n, n), rng, complex_entries=False))


def sample_unitary_batch(n: int, size: int, rng: np.random.Generator) -> np.ndarray:
    _check_dim(n)
    return _batched_q(_ginibre((size, n, n), rng, complex_entries=True))


def sample_haar_batch(group: str, n: int, size: int, rng: np.random.Generator) -> np.ndarray:
    if group == "orthogonal":
        return sample_orthogonal_batch(n, size, rng)
    if group == "unitary":
        return sample_unitary_batch(n, size, rng)
    raise ParameterError(f"Unknown group '{group}'")


def sample_frame(n: int, size: int, rng: np.random.Generator, complex_entries: bool = False) -> np.ndarray:
    """First two columns of ``size`` Haar elements, shape (size, n, 2).

    The first two columns of the Q factor only depend on the first two Ginibre
    columns, so this has the law of K for a full Haar draw.
    """
    if n < 2:
        raise ParameterError(f"A two-column frame needs n >= 2, got {n}")
    return _batched_q(_ginibre((size, n, 2), rng, complex_entries))
