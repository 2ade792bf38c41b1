# src/pairs/laws.py
import logging
from typing import Dict, Optional, Type

import numpy as np
from pydantic import BaseModel, Field
from scipy.special import gammaln

from src.errors import ParameterError

logger = logging.getLogger(__name__)


class VectorLaw(BaseModel):
    """A law on R^dimension with mean zero and identity covariance."""
    name: str = ""
    description: str = ""
    dimension: int = Field(ge=1)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        raise NotImplementedError

    @property
    def third_moment(self) -> Optional[float]:
        """E|Y|^3, when a closed form exists."""
        return None

    @property
    def fourth_moment(self) -> Optional[float]:
        """E|Y|^4, when a closed form exists."""
        return None


# --- i.i.d. summand laws on R^k ---

class GaussianLaw(VectorLaw):
    name: str = "gaussian"
    description: str = "Standard Gaussian vector."

    def sample(self, rng, size):
        return rng.standard_normal((size, self.dimension))

    @property
    def third_moment(self):
        k = self.dimension
        return float(2 ** 1.5 * np.exp(gammaln((k + 3) / 2) - gammaln(k / 2)))

    @property
    def fourth_moment(self):
        k = self.dimension
        return float(k * k + 2 * k)


class RademacherLaw(VectorLaw):
    name: str = "rademacher"
    description: str = "Independent +-1 coordinates; |Y|^2 = k identically."

    def sample(self, rng, size):
        return rng.choice(np.array([-1.0, 1.0]), size=(size, self.dimension))

    @property
    def third_moment(self):
        return float(self.dimension ** 1.5)

    @property
    def fourth_moment(self):
        return float(self.dimension ** 2)


class UniformLaw(VectorLaw):
    name: str = "uniform"
    description: str = "Independent uniform coordinates on [-sqrt(3), sqrt(3)]."

    def sample(self, rng, size):
        half = np.sqrt(3.0)
        return rng.uniform(-half, half, size=(size, self.dimension))

    @property
    def fourth_moment(self):
        k = self.dimension
        # E y^4 = 9/5 per coordinate
        return float(k * 9.0 / 5.0 + k * (k - 1))


IID_LAWS: Dict[str, Type[VectorLaw]] = {
    "gaussian": GaussianLaw,
    "rademacher": RademacherLaw,
    "uniform": UniformLaw,
}


# --- Spherically symmetric laws on R^n ---

class SphericalLaw(VectorLaw):
    @property
    def variance_bound(self) -> float:
        """A constant a with Var(|Y|^2) <= a."""
        raise NotImplementedError


class SphereLaw(SphericalLaw):
    name: str = "sphere"
    description: str = "Uniform on the sphere of radius sqrt(n)."

    def sample(self, rng, size):
        g = rng.standard_normal((size, self.dimension))
        return np.sqrt(self.dimension) * g / np.linalg.norm(g, axis=1, keepdims=True)

    @property
    def variance_bound(self):
        return 0.0


class SphericalGaussianLaw(SphericalLaw):
    name: str = "gaussian"
    description: str = "Standard Gaussian on R^n; Var(|Y|^2) = 2n."

    def sample(self, rng, size):
        return rng.standard_normal((size, self.dimension))

    @property
    def variance_bound(self):
        return 2.0 * self.dimension


SPHERICAL_LAWS: Dict[str, Type[SphericalLaw]] = {
    "sphere": SphereLaw,
    "gaussian": SphericalGaussianLaw,
}


def iid_law(name: str, k: int) -> VectorLaw:
    if name not in IID_LAWS:
        raise ParameterError(f"Unknown i.i.d. law '{name}'; choose from {sorted(IID_LAWS)}")
    return IID_LAWS[name](dimension=k)


def spherical_law(name: str, n: int) -> SphericalLaw:
    if name not in SPHERICAL_LAWS:
        raise ParameterError(f"Unknown spherical law '{name}'; choose from {sorted(SPHERICAL_LAWS)}")
    return SPHERICAL_LAWS[name](dimension=n)
