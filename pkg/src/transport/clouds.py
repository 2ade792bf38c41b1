# src/transport/clouds.py
import io
import logging
from typing import Callable, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.errors import DimensionError, ParameterError
from src.pairs.base import PairModel
from src.pairs.models import realify_vectors

logger = logging.getLogger(__name__)

LawSampler = Callable[[np.random.Generator, int], np.ndarray]


class SampleCloud(BaseModel):
    """m points in R^k, with the seed and label of whatever produced them."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    points: np.ndarray
    seed: Optional[int] = None
    source: str = Field(default="", description="Label of the law or model the points came from.")

    @model_validator(mode="after")
    def _check_points(self):
        if self.points.ndim != 2:
            raise DimensionError(f"A cloud is an m x k array, got shape {self.points.shape}")
        if self.points.shape[0] < 2:
            raise ParameterError(f"A cloud needs at least 2 points, got {self.points.shape[0]}")
        if not np.all(np.isfinite(self.points)):
            raise ParameterError(f"Cloud '{self.source}' contains non-finite points")
        return self

    @property
    def m(self) -> int:
        return self.points.shape[0]

    @property
    def k(self) -> int:
        return self.points.shape[1]

    def to_csv(self) -> str:
        buffer = io.StringIO()
        np.savetxt(buffer, self.points, delimiter=",", fmt="%.17g")
        return buffer.getvalue()

    @classmethod
    def from_csv(cls, text: str, source: str = "csv", seed: Optional[int] = None) -> "SampleCloud":
        try:
            points = np.loadtxt(io.StringIO(text), delimiter=",", ndmin=2)
        except ValueError as e:
            raise ParameterError(f"Could not parse cloud CSV: {e}")
        return cls(points=points, source=source, seed=seed)


def cloud_from_sampler(sampler: LawSampler, m: int, rng: np.random.Generator, source: str = "sampler") -> SampleCloud:
    return SampleCloud(points=np.asarray(sampler(rng, m), dtype=float), source=source)


def gaussian_sampler(k: int, cov: Optional[np.ndarray] = None) -> LawSampler:
    """Sampler for N(0, cov) in R^k; cov defaults to the identity."""
    if cov is None:
        return lambda rng, m: rng.standard_normal((m, k))
    cov = np.asarray(cov, dtype=float)
    if cov.shape != (k, k):
        raise DimensionError(f"Covariance must be {k} x {k}, got {cov.shape}")
    root = np.linalg.cholesky(cov + 1e-15 * np.eye(k))
    return lambda rng, m: rng.standard_normal((m, k)) @ root.T


def gaussian_cloud(m: int, k: int, rng: np.random.Generator, cov: Optional[np.ndarray] = None) -> SampleCloud:
    return cloud_from_sampler(gaussian_sampler(k, cov), m, rng, source="gaussian")


def model_sampler(model: PairModel) -> LawSampler:
    """Draws X from a pair model's state law; complex models are realified."""
    def sample(rng: np.random.Generator, m: int) -> np.ndarray:
        chunks = []
        remaining = m
        while remaining > 0:
            size = min(remaining, model.chunk_size)
            x = model.draw_states(rng, size)["x"]
            chunks.append(realify_vectors(x) if model.complex_valued else np.asarray(x))
            remaining -= size
        return np.concatenate(chunks)

    return sample


def model_cloud(model: PairModel, m: int, rng: np.random.Generator) -> SampleCloud:
    return cloud_from_sampler(model_sampler(model), m, rng, source=model.kind)


def target_sampler(model: PairModel) -> LawSampler:
    """The Gaussian a model is compared with: N(0, sigma^2 I) in the realified dimension."""
    dim = 2 * model.k if model.complex_valued else model.k
    if model.sigma2 == 1.0:
        return gaussian_sampler(dim)
    return gaussian_sampler(dim, model.sigma2 * np.eye(dim))
