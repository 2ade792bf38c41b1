# src/transport/wasserstein.py
import logging
import math
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from src.errors import DimensionError, ParameterError, SizeError
from src.parallel import Seed, run_partitioned, spawn_streams
from src.transport.clouds import LawSampler, SampleCloud, cloud_from_sampler

logger = logging.getLogger(__name__)

EXACT_CAP = 4096
MIN_REPS = 3
SE_TOLERANCE = 4.0
CSV_HEADER = ["m", "w1", "self", "debiased", "bound", "pass"]


def _check_pair(a: SampleCloud, b: SampleCloud) -> None:
    if a.k != b.k:
        raise DimensionError(f"Clouds live in different dimensions: {a.k} vs {b.k}")


def w1_exact(a: SampleCloud, b: SampleCloud) -> float:
    """W1 between two equal-size empirical measures: the cheapest perfect matching."""
    _check_pair(a, b)
    if a.m != b.m:
        raise DimensionError(f"Exact W1 needs equal sizes, got {a.m} and {b.m}")
    if a.m > EXACT_CAP:
        raise SizeError(f"m = {a.m} exceeds the exact solver cap {EXACT_CAP}; use w1_sliced_lb instead")
    cost = cdist(a.points, b.points)
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].sum() / a.m)


def _sorted_w1(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Column-wise 1-D W1 between equal-size samples."""
    return np.mean(np.abs(np.sort(x, axis=0) - np.sort(y, axis=0)), axis=0)


def w1_sliced_lb(a: SampleCloud, b: SampleCloud, directions: int, rng: np.random.Generator) -> float:
    """Max over random unit directions of the 1-D W1 of the projections.

    Projection onto a unit vector is 1-Lipschitz, so each term is a lower bound
    on W1 between the two empirical measures.
    """
    _check_pair(a, b)
    if a.m != b.m:
        raise DimensionError(f"Sliced W1 needs equal sizes, got {a.m} and {b.m}")
    if directions < 1:
        raise ParameterError(f"Need at least one direction, got {directions}")
    if a.k == 1:
        return float(_sorted_w1(a.points, b.points)[0])
    theta = rng.standard_normal((a.k, directions))
    theta /= np.linalg.norm(theta, axis=0)
    return float(np.max(_sorted_w1(a.points @ theta, b.points @ theta)))


def self_distance(
    sampler: LawSampler, m: int, reps: int, rng: Seed, threads: Optional[int] = None
) -> Tuple[float, float]:
    """Mean and SE of W1 between independent same-size clouds of one law."""
    if reps < MIN_REPS:
        raise ParameterError(f"Self distance needs at least {MIN_REPS} repetitions, got {reps}")

    def work(stream: np.random.Generator, count: int) -> List[float]:
        out = []
        for rep_stream in spawn_streams(stream, count):
            first = cloud_from_sampler(sampler, m, rep_stream)
            second = cloud_from_sampler(sampler, m, rep_stream)
            out.append(w1_exact(first, second))
        return out

    values = np.array([d for part in run_partitioned(work, reps, rng, threads) for d in part])
    mean, se = float(values.mean()), float(values.std(ddof=1) / math.sqrt(reps))
    logger.debug(f"Self distance at m={m}: {mean:.5f} +/- {se:.5f} over {reps} reps")
    return mean, se


class ComparisonRow(BaseModel):
    """Empirical W1 against a theorem bound, debiased by the target's self distance.

    ``combined_se`` adds the spread of a single W1 draw (estimated from the
    self-distance repetitions), the SE of the self-distance mean, and the SE of
    the bound when it was estimated.
    """
    m: int
    w1: float
    self_distance: float
    self_se: float
    debiased: float
    bound: float
    bound_se: float = 0.0
    combined_se: float
    passed: bool
    sliced_lb: Optional[float] = Field(default=None, description="Sliced lower bound on W1, when computed.")
    sliced_passed: Optional[bool] = None

    def csv_row(self) -> List[str]:
        return [
            str(self.m),
            repr(self.w1),
            repr(self.self_distance),
            repr(self.debiased),
            repr(self.bound),
            "true" if self.passed else "false",
        ]


def compare_to_bound(
    x_cloud: SampleCloud,
    z_sampler: LawSampler,
    bound: float,
    reps: int,
    rng: Seed,
    bound_se: float = 0.0,
    directions: Optional[int] = None,
    threads: Optional[int] = None,
) -> ComparisonRow:
    """Checks max(0, W1(X, Z) - self distance of Z) <= bound + 4 combined SE."""
    m = x_cloud.m
    z_stream, self_stream, slice_stream = spawn_streams(rng, 3)
    z_cloud = cloud_from_sampler(z_sampler, m, z_stream, source="target")
    self_mean, self_se = self_distance(z_sampler, m, reps, self_stream, threads)
    combined = math.sqrt(self_se ** 2 * (reps + 1) + bound_se ** 2)
    allowance = bound + SE_TOLERANCE * combined

    w1 = w1_exact(x_cloud, z_cloud)
    debiased = max(0.0, w1 - self_mean)
    sliced_lb, sliced_passed = None, None
    if directions is not None:
        sliced_lb = w1_sliced_lb(x_cloud, z_cloud, directions, slice_stream)
        sliced_passed = sliced_lb - self_mean <= allowance
    row = ComparisonRow(
        m=m,
        w1=w1,
        self_distance=self_mean,
        self_se=self_se,
        debiased=debiased,
        bound=bound,
        bound_se=bound_se,
        combined_se=combined,
        passed=debiased <= allowance,
        sliced_lb=sliced_lb,
        sliced_passed=sliced_passed,
    )
    logger.info(f"W1 comparison at m={m}: debiased {debiased:.5f} vs bound {bound:.5f} (pass={row.passed})")
    return row
