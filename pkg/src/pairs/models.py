# src/pairs/models.py
import logging
from typing import Callable, Optional, Tuple, Union

import numpy as np

from src.errors import ParameterError
from src.haar.rotation import cos_minus_one, frame_terms
from src.haar.sampling import sample_frame, sample_orthogonal_batch, sample_unitary_batch
from src.pairs.base import PairModel, States
from src.pairs.families import ProjectionFamily
from src.pairs.laws import SphericalLaw, VectorLaw

logger = logging.getLogger(__name__)

PROJECTION_CHUNK = 1_000


def realify_gamma_lambda(gamma: np.ndarray, lam: np.ndarray) -> np.ndarray:
    """Real 2k x 2k F assembled from 2 x 2 blocks built out of gamma_ij and lambda_ij.

    Coordinates are interleaved as (Re w_1, Im w_1, Re w_2, ...). The blocks
    satisfy ||F||_HS^2 = (||Gamma||_HS^2 + ||Lambda||_HS^2) / 2.
    """
    gamma = np.asarray(gamma)
    lam = np.asarray(lam)
    k = gamma.shape[-1]
    out = np.empty(gamma.shape[:-2] + (2 * k, 2 * k))
    out[..., 0::2, 0::2] = 0.5 * np.real(gamma + lam)
    out[..., 0::2, 1::2] = 0.5 * np.imag(lam - gamma)
    out[..., 1::2, 0::2] = 0.5 * np.imag(lam + gamma)
    out[..., 1::2, 1::2] = 0.5 * np.real(gamma - lam)
    return out


def realify_vectors(z: np.ndarray) -> np.ndarray:
    """(size, k) complex -> (size, 2k) real, interleaving real and imaginary parts."""
    z = np.asarray(z)
    return np.stack([np.real(z), np.imag(z)], axis=-1).reshape(z.shape[:-1] + (2 * z.shape[-1],))


# --- The four constructions ---

class IidSumPair(PairModel):
    """W = n^{-1/2} sum Y_i; W' swaps a uniformly chosen Y_I for an independent copy."""
    kind: str = "iid_sum"
    description: str = "Normalized sum of i.i.d. vectors with the replace-one-summand pair (lambda = 1/n)."
    law: VectorLaw

    def draw_states(self, rng, size, epsilon=None):
        y = self.law.sample(rng, size * self.n).reshape(size, self.n, self.k)
        return {"x": y.sum(axis=1) / np.sqrt(self.n), "y": y}

    def increment_pair(self, states, rng, epsilon=None):
        y = states["y"]
        size = y.shape[0]
        index = rng.integers(self.n, size=size)
        fresh = self.law.sample(rng, size)
        return (fresh - y[np.arange(size), index]) / np.sqrt(self.n), None

    def analytic_matrices(self, states):
        # E[E | Y] = (1/2n) sum_i (Y_i Y_i^T - I)
        y = states["y"]
        outer = np.einsum("sni,snj->sij", y, y) / (2.0 * self.n)
        return {"E": outer - 0.5 * np.eye(self.k)}


class SphericalPair(PairModel):
    """X = P_k Y for spherically symmetric Y on R^n, X_eps = P_k (U A_eps U^T) Y."""
    kind: str = "spherical"
    description: str = "First k coordinates of a spherically symmetric vector under a small random rotation."
    continuous: bool = True
    law: SphericalLaw

    @property
    def variance_bound(self) -> float:
        return self.law.variance_bound

    def draw_states(self, rng, size, epsilon=None):
        y = self.law.sample(rng, size)
        return {"x": y[:, : self.k], "y": y}

    def increment_pair(self, states, rng, epsilon=None):
        y = states["y"]
        frames = sample_frame(self.n, y.shape[0], rng)
        kty = np.einsum("sna,sn->sa", frames, y)
        # C2 (a, b) = (b, -a)
        twisted = np.stack([kty[:, 1], -kty[:, 0]], axis=1)
        trace = np.einsum("sna,sa->sn", frames[:, : self.k], kty)
        twist = np.einsum("sna,sa->sn", frames[:, : self.k], twisted)
        base = cos_minus_one(epsilon) * trace
        return base + epsilon * twist, base - epsilon * twist

    def analytic_matrices(self, states):
        y, x = states["y"], states["x"]
        r2 = np.sum(y * y, axis=1)
        eye = np.eye(self.k)
        f = (r2 - (self.n - 1))[:, None, None] * eye - np.einsum("si,sj->sij", x, x)
        return {"F": f / (self.n - 1)}


class _ProjectionPair(PairModel):
    continuous: bool = True
    chunk_size: int = PROJECTION_CHUNK
    family: ProjectionFamily

    def _draw_group(self, rng, size) -> np.ndarray:
        raise NotImplementedError

    def draw_states(self, rng, size, epsilon=None):
        m = self._draw_group(rng, size)
        x = np.einsum("kab,sba->sk", self.family.stacked, m)
        if not self.complex_valued:
            x = np.real(x)
        return {"x": x, "m": m}

    def increment_pair(self, states, rng, epsilon=None):
        m = states["m"]
        frames = sample_frame(self.n, m.shape[0], rng, complex_entries=self.complex_valued)
        p = np.einsum("sba,sbc->sac", np.conj(m), frames)
        r = np.einsum("kab,sbc->skac", self.family.stacked, frames)
        trace, twist = frame_terms(p[:, np.newaxis], r)
        if not self.complex_valued:
            trace, twist = np.real(trace), np.real(twist)
        base = cos_minus_one(epsilon) * trace
        return base + epsilon * twist, base - epsilon * twist

    def trace_products(self, m: np.ndarray) -> np.ndarray:
        """T_ij = Tr(A_i M A_j M) per sample."""
        am = np.einsum("kab,sbc->skac", self.family.stacked, m)
        return np.einsum("siab,sjba->sij", am, am)


class OrthogonalProjectionPair(_ProjectionPair):
    kind: str = "orthogonal_projection"
    description: str = "Linear projections Tr(A_i M) of a Haar orthogonal matrix, rotated by U A_eps U^T."

    def _draw_group(self, rng, size):
        return sample_orthogonal_batch(self.n, size, rng)

    def analytic_matrices(self, states):
        t = np.real(self.trace_products(states["m"]))
        return {"F": (np.eye(self.k) - t) / (self.n - 1)}


class UnitaryProjectionPair(_ProjectionPair):
    kind: str = "unitary_projection"
    description: str = "Linear projections Tr(A_i M) of a Haar unitary matrix, rotated by U A_eps U^*."
    complex_valued: bool = True
    sigma2: float = 0.5

    def _draw_group(self, rng, size):
        return sample_unitary_batch(self.n, size, rng)

    def analytic_matrices(self, states):
        w, n = states["x"], self.n
        scale = (n - 1.0) * (n + 1.0)
        gamma = (np.eye(self.k) - np.einsum("si,sj->sij", w, np.conj(w))) / scale
        lam = (np.einsum("si,sj->sij", w, w) - n * self.trace_products(states["m"])) / scale
        return {"gamma": gamma, "lambda": lam, "F": realify_gamma_lambda(gamma, lam)}


class RawPair(PairModel):
    """User-supplied generator; audited with Jensen surrogates only."""
    kind: str = "raw"
    description: str = "Caller-supplied exchangeable pair generator."
    supports_inner_draws: bool = False
    generator: Callable
    lambda_value: Union[float, Callable[[float], float]]

    def lambda_of(self, epsilon=None):
        self.check_epsilon(epsilon)
        if callable(self.lambda_value):
            return float(self.lambda_value(epsilon))
        return float(self.lambda_value)

    def draw_states(self, rng, size, epsilon=None):
        x, x_prime = self.generator(rng, size, epsilon)
        x, x_prime = np.asarray(x), np.asarray(x_prime)
        if x.ndim == 1:
            x, x_prime = x[:, None], x_prime[:, None]
        return {"x": x, "x_prime": x_prime}

    def increment_pair(self, states, rng, epsilon=None):
        return states["x_prime"] - states["x"], None


# --- Constructors ---

def make_iid_sum_pair(y_sampler: VectorLaw, n: int) -> IidSumPair:
    if n < 1:
        raise ParameterError(f"The number of summands must be positive, got {n}")
    return IidSumPair(k=y_sampler.dimension, n=n, law=y_sampler)


def make_spherical_pair(y_sampler: SphericalLaw, k: int) -> SphericalPair:
    n = y_sampler.dimension
    if k > n:
        raise ParameterError(f"Cannot project R^{n} onto k={k} coordinates")
    if n < 2:
        raise ParameterError("The rotation pair needs n >= 2")
    return SphericalPair(k=k, n=n, law=y_sampler)


def make_orthogonal_projection_pair(family: ProjectionFamily) -> OrthogonalProjectionPair:
    if family.complex_valued:
        raise ParameterError("The orthogonal projection pair takes a real family")
    family.require_orthonormal()
    if family.n < 2:
        raise ParameterError("The rotation pair needs n >= 2")
    return OrthogonalProjectionPair(k=family.k, n=family.n, family=family)


def make_unitary_projection_pair(family: ProjectionFamily) -> UnitaryProjectionPair:
    if not family.complex_valued:
        raise ParameterError("The unitary projection pair takes a complex family")
    family.require_orthonormal()
    if family.n < 2:
        raise ParameterError("The rotation pair needs n >= 2")
    return UnitaryProjectionPair(k=family.k, n=family.n, family=family)


def make_raw_pair(
    generator: Callable[[np.random.Generator, int, Optional[float]], Tuple[np.ndarray, np.ndarray]],
    lambda_value: Union[float, Callable[[float], float]],
    sigma2: float = 1.0,
    k: int = 1,
    continuous: bool = False,
    complex_valued: bool = False,
) -> RawPair:
    """Escape hatch for pairs outside the four constructions; no auditing guarantees."""
    return RawPair(
        k=k, n=1, sigma2=sigma2, continuous=continuous, complex_valued=complex_valued,
        generator=generator, lambda_value=lambda_value,
    )

