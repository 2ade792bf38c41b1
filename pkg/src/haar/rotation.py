# src/haar/rotation.py
import logging
from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.errors import DimensionError, ParameterError
from src.haar.sampling import sample_orthogonal, sample_unitary
from src.linalg.matrices import Matrix, as_matrix

logger = logging.getLogger(__name__)

MAX_EPSILON = 0.5
GROUP_TOL = 1e-10
C2 = np.array([[0.0, 1.0], [-1.0, 0.0]])


def rotation_block(epsilon: float) -> np.ndarray:
    c = np.sqrt(1.0 - epsilon ** 2)
    return np.array([[c, epsilon], [-epsilon, c]])


class RotationPerturbation(BaseModel):
    """A_eps = [[sqrt(1-e^2), e], [-e, sqrt(1-e^2)]] (+) I_{n-2}."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    epsilon: float = Field(gt=0.0, lt=1.0)
    dimension: int = Field(ge=2)
    a_eps: np.ndarray
    delta: float = Field(description="sqrt(1 - eps^2) - 1 + eps^2 / 2, of order eps^4.")

    @classmethod
    def build(cls, epsilon: float, n: int) -> "RotationPerturbation":
        if not 0.0 < epsilon < 1.0:
            raise ParameterError(f"epsilon must lie in (0, 1), got {epsilon}")
        if n < 2:
            raise ParameterError(f"The rotation needs n >= 2, got {n}")
        a = np.eye(n)
        a[:2, :2] = rotation_block(epsilon)
        return cls(epsilon=epsilon, dimension=n, a_eps=a, delta=rotation_delta(epsilon))


def cos_minus_one(epsilon: float) -> float:
    """sqrt(1 - eps^2) - 1 without cancellation."""
    return -epsilon ** 2 / (1.0 + np.sqrt(1.0 - epsilon ** 2))


def rotation_delta(epsilon: float) -> float:
    return float(epsilon ** 2 / 2.0 + cos_minus_one(epsilon))


class ConjugatedRotation(BaseModel):
    """Witness of one conjugated rotation: U, K = U[:, :2] and Q = K C2 K^*."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    u: np.ndarray
    k_cols: np.ndarray
    q: np.ndarray

    @model_validator(mode="after")
    def _check_shapes(self):
        n = self.u.shape[0]
        if self.k_cols.shape != (n, 2) or self.q.shape != (n, n):
            raise DimensionError("ConjugatedRotation fields have inconsistent shapes")
        return self

    @classmethod
    def from_group_element(cls, u: Matrix) -> "ConjugatedRotation":
        k = u[:, :2]
        return cls(u=u, k_cols=k, q=k @ C2 @ np.conj(k.T))


def _check_group_element(m: Matrix) -> None:
    n = m.shape[0]
    if m.shape != (n, n):
        raise DimensionError(f"Expected a square group element, got {m.shape}")
    if np.max(np.abs(m @ np.conj(m.T) - np.eye(n))) > GROUP_TOL:
        raise ParameterError("Input is not orthogonal/unitary within 1e-10")


def conjugated_rotation_pair(
    m: Matrix, epsilon: float, rng: np.random.Generator
) -> Tuple[Matrix, ConjugatedRotation]:
    """M_eps = U A_eps U^* M for a fresh Haar U of the same group as M."""
    if not 0.0 < epsilon <= MAX_EPSILON:
        raise ParameterError(f"epsilon must lie in (0, 1/2], got {epsilon}")
    m = as_matrix(m)
    _check_group_element(m)
    n = m.shape[0]
    u = sample_unitary(n, rng) if np.iscomplexobj(m) else sample_orthogonal(n, rng)
    rot = RotationPerturbation.build(epsilon, n)
    m_eps = u @ rot.a_eps @ np.conj(u.T) @ m
    return m_eps, ConjugatedRotation.from_group_element(u)


def increment_expansion(m: Matrix, witness: ConjugatedRotation, epsilon: float) -> Matrix:
    """eps [(-eps/2 + delta/eps) K K^* + Q] M, which equals M_eps - M exactly."""
    k = witness.k_cols
    delta = rotation_delta(epsilon)
    kk = k @ np.conj(k.T)
    return epsilon * ((-epsilon / 2.0 + delta / epsilon) * kk + witness.q) @ m


def frame_terms(p: np.ndarray, r: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """(Tr G, G[1, 0] - G[0, 1]) for G = p^* r, over inputs of shape (..., n, 2).

    With p = M^* K and r = A K these are Tr(A K K^* M) and Tr(A Q M).
    """
    g = np.einsum("...na,...nb->...ab", np.conj(p), r)
    return g[..., 0, 0] + g[..., 1, 1], g[..., 1, 0] - g[..., 0, 1]


def frame_increment(p: np.ndarray, r: np.ndarray, epsilon: float) -> np.ndarray:
    """Batched Tr(A (M_eps - M)) = (c - 1) Tr(A K K^* M) + eps Tr(A Q M), c = sqrt(1 - eps^2)."""
    trace, twist = frame_terms(p, r)
    return cos_minus_one(epsilon) * trace + epsilon * twist
