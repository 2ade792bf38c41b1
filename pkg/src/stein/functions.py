# src/stein/functions.py
import logging
import math
from typing import Callable, Dict, Optional, Tuple, Type

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.errors import DimensionError, ParameterError

logger = logging.getLogger(__name__)

GRADIENT_STEP = 1e-5
SPOT_CHECK_POINTS = 1_000
SPOT_CHECK_RADIUS = 1.5
DECLARED_RTOL = 1e-6


class TestFunction(BaseModel):
    """A test function g: R^k -> R with its derivatives and smoothness constants.

    All evaluators are batched: ``x`` has shape (N, k). Gradients fall back to
    central differences with step 1e-5 (1 + |x|) when no closed form is given.
    """
    __test__ = False
    model_config = ConfigDict(arbitrary_types_allowed=True)

    name: str = ""
    description: str = ""
    k: int = Field(ge=1, description="Arity.")
    m1: Optional[float] = Field(default=None, ge=0.0, description="Lipschitz constant of g.")
    m2: Optional[float] = Field(default=None, ge=0.0, description="Lipschitz constant of the gradient.")
    m3: Optional[float] = Field(default=None, ge=0.0, description="Lipschitz constant of the Hessian (operator norm).")
    has_hessian: bool = True

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x[np.newaxis, :]
        if x.shape[-1] != self.k:
            raise DimensionError(f"{self.name} takes points in R^{self.k}, got shape {x.shape}")
        return x

    def value(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def gradient(self, x: np.ndarray) -> np.ndarray:
        x = self._check(x)
        step = GRADIENT_STEP * (1.0 + np.linalg.norm(x, axis=1))
        grad = np.empty_like(x)
        for i in range(self.k):
            shift = np.zeros_like(x)
            shift[:, i] = step
            grad[:, i] = (self.value(x + shift) - self.value(x - shift)) / (2.0 * step)
        return grad

    def hessian(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError(f"{self.name} has no second derivatives")

    def laplacian(self, x: np.ndarray) -> np.ndarray:
        if self.has_hessian:
            return np.trace(self.hessian(x), axis1=-2, axis2=-1)
        x = self._check(x)
        step = 1e-4 * (1.0 + np.linalg.norm(x, axis=1))
        total = np.zeros(x.shape[0])
        for i in range(self.k):
            shift = np.zeros_like(x)
            shift[:, i] = step
            total += (self.gradient(x + shift)[:, i] - self.gradient(x - shift)[:, i]) / (2.0 * step)
        return total

    def with_constants(self, rng: np.random.Generator) -> "TestFunction":
        """Fills undeclared M1/M2 by spot-checking, and verifies declared ones."""
        points = spot_check_points(self.k, rng)
        m1, m2 = estimate_lipschitz_constants(self, points)
        for label, declared, sampled in (("M1", self.m1, m1), ("M2", self.m2, m2)):
            if declared is not None and declared < sampled * (1.0 - DECLARED_RTOL):
                raise ParameterError(f"Declared {label}={declared} for {self.name} is below the sampled {sampled:.6g}")
        update = {}
        if self.m1 is None:
            update["m1"] = m1
        if self.m2 is None:
            update["m2"] = m2
        if update:
            logger.info(f"Estimated constants for {self.name}: {update}")
        return self.model_copy(update=update)


def spot_check_points(k: int, rng: np.random.Generator, count: int = SPOT_CHECK_POINTS) -> np.ndarray:
    """Gaussian directions with radii scaled by U(0, 1.5), so both the origin and the tails are visited."""
    z = rng.standard_normal((count, k))
    return z * rng.uniform(0.0, SPOT_CHECK_RADIUS, size=(count, 1))


def estimate_lipschitz_constants(f: TestFunction, points: np.ndarray) -> Tuple[float, float]:
    """(max |grad f|, max ||Hess f||_op) over the points.

    Without second derivatives M2 is estimated from gradient differences
    between consecutive points.
    """
    points = np.asarray(points, dtype=float)
    grad = f.gradient(points)
    m1 = float(np.max(np.linalg.norm(grad, axis=1)))
    if f.has_hessian:
        m2 = float(np.max(np.linalg.norm(f.hessian(points), ord=2, axis=(1, 2))))
    else:
        dist = np.linalg.norm(points[1:] - points[:-1], axis=1)
        diff = np.linalg.norm(grad[1:] - grad[:-1], axis=1)
        m2 = float(np.max(diff / np.maximum(dist, 1e-300)))
    return m1, m2


# --- Built-in test functions ---

class LinearFunction(TestFunction):
    name: str = "linear"
    description: str = "g(x) = <v, x>, v = (1, ..., 1)/sqrt(k) unless given."
    v: Optional[np.ndarray] = None

    def model_post_init(self, __context) -> None:
        if self.v is None:
            self.v = np.ones(self.k) / math.sqrt(self.k)
        if self.m1 is None:
            self.m1 = float(np.linalg.norm(self.v))
        self.m2 = 0.0 if self.m2 is None else self.m2
        self.m3 = 0.0

    def value(self, x):
        return self._check(x) @ self.v

    def gradient(self, x):
        x = self._check(x)
        return np.broadcast_to(self.v, x.shape).copy()

    def hessian(self, x):
        return np.zeros((self._check(x).shape[0], self.k, self.k))


class ConstantFunction(TestFunction):
    name: str = "constant"
    description: str = "g(x) = c."
    c: float = 1.0
    m1: Optional[float] = 0.0
    m2: Optional[float] = 0.0
    m3: Optional[float] = 0.0

    def value(self, x):
        return np.full(self._check(x).shape[0], self.c)

    def gradient(self, x):
        return np.zeros_like(self._check(x))

    def hessian(self, x):
        return np.zeros((self._check(x).shape[0], self.k, self.k))


class QuadraticFunction(TestFunction):
    name: str = "quadratic"
    description: str = "g(x) = |x|^2 (not globally Lipschitz)."
    m1: Optional[float] = math.inf
    m2: Optional[float] = 2.0
    m3: Optional[float] = 0.0

    def value(self, x):
        x = self._check(x)
        return np.sum(x * x, axis=1)

    def gradient(self, x):
        return 2.0 * self._check(x)

    def hessian(self, x):
        size = self._check(x).shape[0]
        return np.broadcast_to(2.0 * np.eye(self.k), (size, self.k, self.k)).copy()


class SinXCosFunction(TestFunction):
    name: str = "sin-xcos"
    description: str = "g(x) = sin(x_1) + x_2 cos(x_2); further coordinates are ignored."

    def model_post_init(self, __context) -> None:
        if self.k < 2:
            raise ParameterError("sin-xcos needs k >= 2")

    def value(self, x):
        x = self._check(x)
        return np.sin(x[:, 0]) + x[:, 1] * np.cos(x[:, 1])

    def gradient(self, x):
        x = self._check(x)
        grad = np.zeros_like(x)
        grad[:, 0] = np.cos(x[:, 0])
        grad[:, 1] = np.cos(x[:, 1]) - x[:, 1] * np.sin(x[:, 1])
        return grad

    def hessian(self, x):
        x = self._check(x)
        hess = np.zeros((x.shape[0], self.k, self.k))
        hess[:, 0, 0] = -np.sin(x[:, 0])
        hess[:, 1, 1] = -2.0 * np.sin(x[:, 1]) - x[:, 1] * np.cos(x[:, 1])
        return hess


class BumpFunction(TestFunction):
    name: str = "bump"
    description: str = "g(x) = exp(-1/(1 - |x|^2)) inside the unit ball, 0 outside."

    def _parts(self, x) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        x = self._check(x)
        s = 1.0 - np.sum(x * x, axis=1)
        inside = s > 0.0
        g = np.zeros(x.shape[0])
        g[inside] = np.exp(-1.0 / s[inside])
        return x, np.where(inside, s, 1.0), g

    def value(self, x):
        return self._parts(x)[2]

    def gradient(self, x):
        x, s, g = self._parts(x)
        return (-2.0 * g / s ** 2)[:, np.newaxis] * x

    def hessian(self, x):
        x, s, g = self._parts(x)
        outer = np.einsum("si,sj->sij", x, x)
        eye = np.eye(self.k)[np.newaxis]
        return (
            (-2.0 * g / s ** 2)[:, None, None] * eye
            + (4.0 * g / s ** 4 - 8.0 * g / s ** 3)[:, None, None] * outer
        )


class KinkFunction(TestFunction):
    """max{min{x, y}, 0}: Lipschitz with a discontinuous gradient."""
    name: str = "kink"
    description: str = "g(x, y) = max{min{x, y}, 0}; no second derivatives."
    has_hessian: bool = False
    m1: Optional[float] = 1.0
    m2: Optional[float] = math.inf

    def model_post_init(self, __context) -> None:
        if self.k != 2:
            raise ParameterError("The kink function is defined on R^2")

    def value(self, x):
        x = self._check(x)
        return np.maximum(np.minimum(x[:, 0], x[:, 1]), 0.0)

    def gradient(self, x):
        x = self._check(x)
        grad = np.zeros_like(x)
        positive = np.minimum(x[:, 0], x[:, 1]) > 0.0
        first = x[:, 0] < x[:, 1]
        grad[positive & first, 0] = 1.0
        grad[positive & ~first, 1] = 1.0
        return grad


class CallableFunction(TestFunction):
    """Wraps user callables; missing derivatives are differenced or marked unavailable."""
    name: str = "callable"
    description: str = "User-supplied function."
    func: Callable[[np.ndarray], np.ndarray]
    grad_func: Optional[Callable[[np.ndarray], np.ndarray]] = None
    hess_func: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def model_post_init(self, __context) -> None:
        self.has_hessian = self.hess_func is not None

    def value(self, x):
        return np.asarray(self.func(self._check(x)), dtype=float)

    def gradient(self, x):
        if self.grad_func is None:
            return super().gradient(x)
        return np.asarray(self.grad_func(self._check(x)), dtype=float)

    def hessian(self, x):
        if self.hess_func is None:
            return super().hessian(x)
        return np.asarray(self.hess_func(self._check(x)), dtype=float)


TEST_FUNCTIONS: Dict[str, Type[TestFunction]] = {
    "linear": LinearFunction,
    "constant": ConstantFunction,
    "quadratic": QuadraticFunction,
    "sin-xcos": SinXCosFunction,
    "bump": BumpFunction,
    "kink": KinkFunction,
}


def make_test_function(name: str, k: int) -> TestFunction:
    if name not in TEST_FUNCTIONS:
        raise ParameterError(f"Unknown test function '{name}'; choose from {sorted(TEST_FUNCTIONS)}")
    return TEST_FUNCTIONS[name](k=k)
