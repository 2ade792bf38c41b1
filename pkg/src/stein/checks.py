# src/stein/checks.py
import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field

from src.errors import ParameterError
from src.stein.functions import KinkFunction, TestFunction
from src.stein.solution import SteinSolution, stein_evaluate

logger = logging.getLogger(__name__)

NUMERICAL_ALLOWANCE = 0.05
M3_CONSTANT = math.sqrt(2.0 * math.pi) / 4.0
KINK_DISTANCES = (0.1, 0.05, 0.025)
CHARACTERIZING_CHUNK = 100_000


def characterizing_check(f: TestFunction, samples: int, rng: np.random.Generator) -> Tuple[float, float]:
    """Mean and SE of Laplacian f(Z) - <Z, grad f(Z)>, which vanishes for Gaussian Z."""
    if samples < 2:
        raise ParameterError(f"Need at least two samples, got {samples}")
    total, total_sq, count = 0.0, 0.0, 0
    while count < samples:
        size = min(CHARACTERIZING_CHUNK, samples - count)
        z = rng.standard_normal((size, f.k))
        values = f.laplacian(z) - np.sum(z * f.gradient(z), axis=1)
        total += float(values.sum())
        total_sq += float(np.sum(values ** 2))
        count += size
    mean = total / count
    var = max(total_sq / count - mean ** 2, 0.0) * count / (count - 1)
    return mean, math.sqrt(var / count)


class HessianNormAudit(BaseModel):
    """sup ||Hess h||_HS <= M1(g), checked at a list of points."""
    m1: float
    norms: List[float]
    max_norm: float
    passed: bool


def hessian_norm_audit(sol: SteinSolution, points: Sequence) -> HessianNormAudit:
    m1 = sol.function.m1
    if m1 is None:
        raise ParameterError(f"M1 of {sol.function.name} is not declared; call with_constants first")
    norms = [float(np.linalg.norm(stein_evaluate(sol, x)[2])) for x in points]
    max_norm = max(norms)
    return HessianNormAudit(
        m1=m1, norms=norms, max_norm=max_norm, passed=max_norm <= m1 * (1.0 + NUMERICAL_ALLOWANCE)
    )


class KinkGrowth(BaseModel):
    """Hessian-difference ratios of the kink solution at shrinking distances from the corner."""
    distances: List[float]
    ratios: List[float]
    increasing: bool


class DerivativeAudit(BaseModel):
    function: str
    m2: Optional[float]
    bound: Optional[float] = Field(description="(sqrt(2 pi)/4) M2(g); None when M2 is infinite or unknown.")
    ratios: List[float]
    max_ratio: float
    passed: Optional[bool]
    kink: Optional[KinkGrowth] = None


def hessian_lipschitz_ratio(sol: SteinSolution, x, y) -> float:
    """||Hess h(x) - Hess h(y)||_op / |x - y|."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    dist = float(np.linalg.norm(x - y))
    if dist == 0.0:
        raise ParameterError("Point pairs must be distinct")
    diff = stein_evaluate(sol, x)[2] - stein_evaluate(sol, y)[2]
    return float(np.linalg.norm(diff, ord=2)) / dist


def kink_growth(nodes: int, samples: int, seed: int, distances: Sequence[float] = KINK_DISTANCES) -> KinkGrowth:
    """Ratios for pairs straddling the diagonal x = y, each point at the given distance from the origin.

    The solution for max{min{x, y}, 0} has a second derivative that is not
    Lipschitz at the corner, so these ratios keep growing as the pair closes in.
    """
    sol = SteinSolution.build(KinkFunction(k=2), nodes=nodes, samples=samples, seed=seed)
    direction = np.array([-1.0, 1.0]) / math.sqrt(2.0)
    ratios = [hessian_lipschitz_ratio(sol, d * direction, -d * direction) for d in distances]
    increasing = all(b > a for a, b in zip(ratios, ratios[1:]))
    logger.info(f"Kink ratios at distances {list(distances)}: {[round(r, 4) for r in ratios]}")
    return KinkGrowth(distances=list(distances), ratios=ratios, increasing=increasing)


def derivative_bound_audit(
    sol: SteinSolution, point_pairs: Sequence[Tuple[np.ndarray, np.ndarray]], include_kink: bool = True
) -> DerivativeAudit:
    """Hessian-Lipschitz ratios against (sqrt(2 pi)/4) M2(g), plus the kink counterexample."""
    if not point_pairs:
        raise ParameterError("derivative_bound_audit needs at least one point pair")
    ratios = [hessian_lipschitz_ratio(sol, x, y) for x, y in point_pairs]
    m2 = sol.function.m2
    bound = M3_CONSTANT * m2 if m2 is not None and math.isfinite(m2) else None
    max_ratio = max(ratios)
    passed = None if bound is None else max_ratio <= bound * (1.0 + NUMERICAL_ALLOWANCE)
    kink = kink_growth(sol.nodes, sol.samples, sol.seed) if include_kink else None
    if passed is False:
        logger.warning(f"{sol.function.name}: Hessian ratio {max_ratio:.4g} exceeds {bound:.4g}")
    return DerivativeAudit(
        function=sol.function.name,
        m2=m2 if m2 is not None and math.isfinite(m2) else None,
        bound=bound,
        ratios=ratios,
        max_ratio=max_ratio,
        passed=passed,
        kink=kink,
    )
