# src/pairs/families.py
import logging
from typing import List, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.errors import DimensionError, NormalizationError
from src.linalg.gram import GramData, gram_matrix, gram_schmidt_hs
from src.linalg.matrices import Matrix, as_matrix, load_family

logger = logging.getLogger(__name__)

NORMALIZATION_RTOL = 1e-8


class ProjectionFamily(BaseModel):
    """Matrices A_1..A_k defining X = (Tr(A_1 M), ..., Tr(A_k M))."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    matrices: List[np.ndarray]
    complex_valued: bool = Field(description="True for families used with Haar unitaries.")
    gram: GramData

    @property
    def k(self) -> int:
        return len(self.matrices)

    @property
    def n(self) -> int:
        return self.matrices[0].shape[0]

    @property
    def stacked(self) -> np.ndarray:
        return np.stack(self.matrices)

    def normalization_error(self) -> float:
        return float(np.max(np.abs(self.gram.gram - self.n * np.eye(self.k))))

    def is_orthonormal(self) -> bool:
        return self.normalization_error() <= NORMALIZATION_RTOL * self.n

    def require_orthonormal(self) -> None:
        if not self.is_orthonormal():
            raise NormalizationError(
                f"Family is not H-S orthonormal to norm sqrt(n): Gram deviation {self.normalization_error():.3e}"
            )

    @classmethod
    def from_matrices(
        cls, matrices: Sequence[Matrix], complex_valued: bool = False, orthonormalize: bool = False
    ) -> "ProjectionFamily":
        mats = [as_matrix(m) for m in matrices]
        if not mats:
            raise DimensionError("A projection family needs at least one matrix")
        n = mats[0].shape[0]
        if any(m.shape != (n, n) for m in mats):
            raise DimensionError("Projection family matrices must all be n x n")
        if orthonormalize:
            mats, _ = gram_schmidt_hs(mats, target_norm=float(np.sqrt(n)))
        if complex_valued:
            mats = [m.astype(np.complex128) for m in mats]
        elif any(np.iscomplexobj(m) for m in mats):
            raise DimensionError("Complex matrices need complex_valued=True")
        return cls(matrices=mats, complex_valued=complex_valued, gram=gram_matrix(mats))

    @classmethod
    def from_text(cls, text: str, complex_valued: bool = False, orthonormalize: bool = False) -> "ProjectionFamily":
        return cls.from_matrices(load_family(text), complex_valued, orthonormalize)


def random_family(k: int, n: int, rng: np.random.Generator, complex_valued: bool = False) -> ProjectionFamily:
    """Gaussian matrices, then Gram-Schmidt to H-S norm sqrt(n)."""
    if complex_valued:
        raw: List[np.ndarray] = [rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)) for _ in range(k)]
    else:
        raw = [rng.standard_normal((n, n)) for _ in range(k)]
    logger.debug(f"Drew a random {'complex' if complex_valued else 'real'} family with k={k}, n={n}")
    return ProjectionFamily.from_matrices(raw, complex_valued=complex_valued, orthonormalize=True)


def single_entry_family(n: int, complex_valued: bool = False) -> ProjectionFamily:
    """k = 1 with A_1 = sqrt(n) E_11, so X = sqrt(n) m_11."""
    a = np.zeros((n, n))
    a[0, 0] = np.sqrt(n)
    return ProjectionFamily.from_matrices([a], complex_valued=complex_valued)
