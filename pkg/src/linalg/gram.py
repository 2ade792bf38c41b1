# src/linalg/gram.py
import logging
from typing import List, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.errors import DimensionError, LinearDependenceError, ParameterError
from src.linalg.matrices import Matrix, as_matrix, hs_inner, hs_norm

logger = logging.getLogger(__name__)

PIVOT_RTOL = 1e-12
SYMMETRY_RTOL = 1e-12


class GramData(BaseModel):
    """H-S Gram matrix b_ij = <B_i, B_j> of a family, with scale n."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    k: int = Field(description="Number of matrices in the family.")
    gram: np.ndarray = Field(description="k x k symmetric (Hermitian) matrix of H-S inner products.")
    scale: float = Field(description="Normalization scale, the ambient dimension n.")

    @model_validator(mode="after")
    def _check_shape(self):
        if self.gram.shape != (self.k, self.k):
            raise DimensionError(f"Gram matrix shape {self.gram.shape} does not match k={self.k}")
        tol = SYMMETRY_RTOL * max(1.0, float(np.max(np.abs(self.gram))))
        if np.max(np.abs(self.gram - np.conj(self.gram.T))) > tol:
            raise DimensionError("Gram matrix is not symmetric/Hermitian")
        return self

    @property
    def covariance(self) -> np.ndarray:
        """C = gram / scale."""
        return self.gram / self.scale

    def is_normalized(self, atol: float = 1e-8) -> bool:
        return bool(np.all(np.abs(np.real(np.diag(self.gram)) - self.scale) <= atol * self.scale))


def gram_matrix(family: Sequence[Matrix]) -> GramData:
    if not family:
        raise DimensionError("Cannot build a Gram matrix of an empty family")
    mats = [as_matrix(m) for m in family]
    k = len(mats)
    dtype = np.complex128 if any(np.iscomplexobj(m) for m in mats) else np.float64
    gram = np.zeros((k, k), dtype=dtype)
    for i in range(k):
        for j in range(i, k):
            gram[i, j] = hs_inner(mats[i], mats[j])
            gram[j, i] = np.conj(gram[i, j])
    return GramData(k=k, gram=gram, scale=float(mats[0].shape[0]))


def gram_schmidt_hs(family: Sequence[Matrix], target_norm: float) -> Tuple[List[Matrix], np.ndarray]:
    """Orthonormalizes a family to H-S norm ``target_norm``.

    Returns the new family A and the lower-triangular D with B_i = sum_l d_il A_l,
    so that D D^* = Gram(B) / target_norm**2.
    """
    if target_norm <= 0:
        raise ParameterError(f"target_norm must be positive, got {target_norm}")
    mats = [as_matrix(m) for m in family]
    if not mats:
        raise DimensionError("Empty family")
    shape = mats[0].shape
    if any(m.shape != shape for m in mats):
        raise DimensionError("All matrices in the family must share one shape")

    k = len(mats)
    dtype = np.complex128 if any(np.iscomplexobj(m) for m in mats) else np.float64
    t2 = target_norm ** 2
    d = np.zeros((k, k), dtype=dtype)
    ortho: List[Matrix] = []
    leading_pivot = None
    for i, b in enumerate(mats):
        residual = b.astype(dtype, copy=True)
        # modified Gram-Schmidt, with one re-orthogonalization sweep
        for _ in range(2):
            for l, a in enumerate(ortho):
                coeff = hs_inner(residual, a) / t2
                d[i, l] += coeff
                residual = residual - coeff * a
        pivot = hs_norm(residual)
        if leading_pivot is None:
            leading_pivot = pivot
        if leading_pivot == 0.0 or pivot <= PIVOT_RTOL * leading_pivot:
            raise LinearDependenceError(
                f"Matrix {i} is linearly dependent on the preceding ones (pivot {pivot:.3e})", index=i
            )
        d[i, i] = pivot / target_norm
        ortho.append(residual * (target_norm / pivot))
    logger.debug(f"Gram-Schmidt produced {k} matrices of H-S norm {target_norm}")
    return ortho, d


def _sizes(a: Sequence) -> List[int]:
    if any(x != int(x) for x in a):
        raise ParameterError(f"Block sizes must be integers, got {list(a)}")
    return [int(x) for x in a]


def diagonal_example_family(a: Sequence[int], n: int) -> List[np.ndarray]:
    """B_i = sqrt(n / a_i) (I_{a_i} (+) 0) for 0 < a_1 < ... < a_k = n."""
    a = _sizes(a)
    if not a or any(x <= 0 for x in a) or any(x >= y for x, y in zip(a, a[1:])):
        raise ParameterError(f"a must be strictly increasing positive integers, got {a}")
    if a[-1] != n:
        raise ParameterError(f"The last entry of a must equal n={n}, got {a[-1]}")
    family = []
    for ai in a:
        b = np.zeros((n, n))
        b[np.arange(ai), np.arange(ai)] = np.sqrt(n / ai)
        family.append(b)
    return family


def diagonal_example_gram(a: Sequence[int], n: int) -> np.ndarray:
    """Closed form n * sqrt(a_min(i,j) / a_max(i,j))."""
    arr = np.asarray(_sizes(a), dtype=np.float64)
    lo = np.minimum.outer(arr, arr)
    hi = np.maximum.outer(arr, arr)
    return n * np.sqrt(lo / hi)


def mix_reduction(family: Sequence[Matrix]) -> Tuple[List[Matrix], np.ndarray]:
    """Reduces a general family to an H-S orthonormal one of norm sqrt(n).

    Samplewise (Tr(B_1 M), ..., Tr(B_k M)) = D (Tr(A_1 M), ..., Tr(A_k M)),
    and D D^* is the covariance C = Gram(B) / n.
    """
    mats = [as_matrix(m) for m in family]
    n = mats[0].shape[0]
    return gram_schmidt_hs(mats, target_norm=float(np.sqrt(n)))
