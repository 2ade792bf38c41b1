# src/stein/solution.py
"""Numerical solution h = U g of the Gaussian Stein equation

    Laplacian h(x) - <x, grad h(x)> = g(x) - E g(Z).

With Z_{x,t} = sqrt(t) x + sqrt(1 - t) Z the solution is

    h(x) = -int_0^1 (1/2t) [E g(Z_{x,t}) - E g(Z)] dt,

and its derivatives come from differentiating under the integral. We put
t = u^2 and then u = sin(theta), so every integrand is a smooth function of
theta on (0, pi/2), and integrate with Gauss-Legendre nodes. The expectation
over Z uses one cached antithetic sample for all evaluation points.
"""
import logging
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.special import roots_legendre

from src.errors import ConfigError, DimensionError, ParameterError
from src.stein.functions import TestFunction

logger = logging.getLogger(__name__)

MIN_NODES = 16
DEFAULT_NODES = 64
DEFAULT_GAUSSIAN_SAMPLES = 100_000
DEFAULT_SEED = 20240101

HessianForm = Literal["direct", "parts"]


class SteinSolution(BaseModel):
    """Quadrature nodes plus a fixed Gaussian sample; immutable once built."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    function: TestFunction
    nodes: int = Field(ge=MIN_NODES)
    samples: int
    seed: int
    hessian_form: HessianForm
    z: np.ndarray = Field(description="Cached sample (Z_1..Z_S/2, -Z_1..-Z_S/2), shape (S, k).")
    theta: np.ndarray
    weights: np.ndarray
    mean_g: float = Field(description="E g(Z) under the cached sample.")

    @classmethod
    def build(
        cls,
        function: TestFunction,
        nodes: int = DEFAULT_NODES,
        samples: int = DEFAULT_GAUSSIAN_SAMPLES,
        seed: int = DEFAULT_SEED,
        hessian_form: Optional[HessianForm] = None,
    ) -> "SteinSolution":
        if nodes < MIN_NODES:
            raise ConfigError(f"Quadrature needs at least {MIN_NODES} nodes, got {nodes}", key="nodes")
        if samples < 2:
            raise ParameterError(f"The Gaussian sample needs at least 2 points, got {samples}")
        if hessian_form is None:
            hessian_form = "direct" if function.has_hessian else "parts"
        if hessian_form == "direct" and not function.has_hessian:
            raise ParameterError(f"{function.name} has no second derivatives; use the integration-by-parts form")

        half = np.random.default_rng(seed).standard_normal(((samples + 1) // 2, function.k))
        z = np.concatenate([half, -half])
        x, w = roots_legendre(nodes)
        theta = np.pi / 4.0 * (x + 1.0)
        weights = np.pi / 4.0 * w
        mean_g = float(np.mean(function.value(z)))
        logger.debug(f"Built Stein solution for {function.name}: nodes={nodes}, samples={z.shape[0]}")
        return cls(
            function=function,
            nodes=nodes,
            samples=z.shape[0],
            seed=seed,
            hessian_form=hessian_form,
            z=z,
            theta=theta,
            weights=weights,
            mean_g=mean_g,
        )

    @property
    def k(self) -> int:
        return self.function.k


def _point(sol: SteinSolution, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (sol.k,):
        raise DimensionError(f"Expected a point in R^{sol.k}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ParameterError(f"Evaluation point must be finite, got {x}")
    return x


def stein_evaluate(sol: SteinSolution, x) -> Tuple[float, np.ndarray, np.ndarray]:
    """(h(x), grad h(x), Hess h(x)).

    In the theta variable, with s = sin(theta), c = cos(theta), Y = s x + c Z:
      h      = -int cot(theta) [E g(Y) - E g(Z)]
      grad h = -int c E grad g(Y)
      Hess h = -int s c E Hess g(Y)         (direct)
             = -int s E[Z grad g(Y)^T]      (integration by parts)
    """
    x = _point(sol, x)
    f, z = sol.function, sol.z
    k = sol.k
    h, grad, hess = 0.0, np.zeros(k), np.zeros((k, k))
    for theta, w in zip(sol.theta, sol.weights):
        s, c = np.sin(theta), np.cos(theta)
        y = s * x + c * z
        h += w * (c / s) * (float(np.mean(f.value(y))) - sol.mean_g)
        g_y = f.gradient(y)
        grad += w * c * g_y.mean(axis=0)
        if sol.hessian_form == "direct":
            hess += w * s * c * f.hessian(y).mean(axis=0)
        else:
            hess += w * s * (z.T @ g_y) / z.shape[0]
    if sol.hessian_form == "parts":
        hess = (hess + hess.T) / 2.0
    return -h, -grad, -hess


def stein_residual(sol: SteinSolution, points: Sequence) -> List[float]:
    """Laplacian h - <x, grad h> - g(x) + E g(Z) at each point."""
    out = []
    for x in points:
        x = _point(sol, x)
        _, grad, hess = stein_evaluate(sol, x)
        g_x = float(sol.function.value(x)[0])
        out.append(float(np.trace(hess) - x @ grad - g_x + sol.mean_g))
    return out
