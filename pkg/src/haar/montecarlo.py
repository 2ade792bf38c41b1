# src/haar/montecarlo.py
import logging
from collections import OrderedDict
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field

from src.errors import NotImplementedDegreeError, ParameterError
from src.haar.moments import MomentPolynomial, MomentQuery, exact_moment, parse_moment_query
from src.haar.sampling import sample_haar_batch
from src.parallel import Seed, chunked, pooled_mean_se, run_partitioned

logger = logging.getLogger(__name__)

MIN_SAMPLES = 100
DEFAULT_MC_SAMPLES = 200_000
SE_TOLERANCE = 4.0
BATTERY_DIMENSIONS = (4, 6, 9)
BATTERY_PATTERNS = (
    "O:u(1,1)u(1,1)",
    "O:u(1,1)u(1,2)",
    "O:u(1,1)u(1,1)u(1,1)u(1,1)",
    "O:u(1,1)u(1,1)u(2,2)u(2,2)",
    "O:u(1,1)u(1,2)u(2,1)u(2,2)",
    "O:q(1,2)q(1,2)",
    "U:h(1,1)h*(1,1)",
    "U:h(1,1)h*(1,2)",
    "U:h(1,1)h(2,2)h*(1,1)h*(2,2)",
    "U:t(1,2)t(2,1)",
)

AnyQuery = Union[MomentQuery, MomentPolynomial]


class MomentEstimate(BaseModel):
    query: str
    exact: Optional[float] = Field(default=None, description="Oracle value, when the degree is supported.")
    estimate: float
    estimate_imag: float = 0.0
    se: float
    samples: int
    within_tolerance: Optional[bool] = None


def as_polynomial(q: AnyQuery) -> MomentPolynomial:
    if isinstance(q, MomentPolynomial):
        return q
    return MomentPolynomial(text=str(q), terms=((1, q),))


def polynomial_values(poly: MomentPolynomial, batch: np.ndarray) -> np.ndarray:
    """Per-draw value of the queried polynomial for a (size, n, n) batch."""
    dtype = np.complex128 if poly.group == "unitary" else np.float64
    values = np.zeros(batch.shape[0], dtype=dtype)
    for coeff, q in poly.terms:
        prod = np.ones(batch.shape[0], dtype=dtype)
        for i, j, conj in q.factors:
            entry = batch[:, i - 1, j - 1]
            prod = prod * (np.conj(entry) if conj else entry)
        values += coeff * prod
    return values


def _accumulate(polys: Sequence[MomentPolynomial], rng: np.random.Generator, count: int) -> List[tuple]:
    group, n = polys[0].group, polys[0].dimension
    sums = [[0.0, 0.0, 0] for _ in polys]
    for size in chunked(count):
        batch = sample_haar_batch(group, n, size, rng)
        for acc, poly in zip(sums, polys):
            v = polynomial_values(poly, batch)
            acc[0] += v.sum()
            acc[1] += float(np.sum(np.abs(v) ** 2))
            acc[2] += size
    return [tuple(acc) for acc in sums]


def mc_moment_estimate(q: AnyQuery, samples: int, rng: np.random.Generator) -> Tuple[Union[float, complex], float]:
    """Sample mean and standard error of the entry product over fresh Haar draws."""
    if samples < MIN_SAMPLES:
        raise ParameterError(f"Monte Carlo estimates need at least {MIN_SAMPLES} samples, got {samples}")
    poly = as_polynomial(q)
    partial = _accumulate([poly], rng, samples)[0]
    mean, se = pooled_mean_se([partial])
    if poly.group == "orthogonal":
        mean = float(np.real(mean))
    return mean, se


def _record(poly: MomentPolynomial, mean, se: float, samples: int) -> MomentEstimate:
    try:
        exact = float(exact_moment(poly))
    except NotImplementedDegreeError as e:
        logger.warning(f"No oracle value for {poly}: {e}")
        exact = None
    mean = complex(mean)
    within = None
    if exact is not None:
        within = bool(abs(mean - exact) <= SE_TOLERANCE * se + 1e-12)
    return MomentEstimate(
        query=str(poly), exact=exact, estimate=mean.real, estimate_imag=mean.imag,
        se=se, samples=samples, within_tolerance=within,
    )


def run_moment_checks(
    queries: Sequence[Union[str, AnyQuery]],
    samples: int = DEFAULT_MC_SAMPLES,
    seed: Seed = 0,
    threads: Optional[int] = None,
) -> List[MomentEstimate]:
    """Oracle vs Monte Carlo for each query; queries on the same (group, n) share draws."""
    if samples < MIN_SAMPLES:
        raise ParameterError(f"Monte Carlo estimates need at least {MIN_SAMPLES} samples, got {samples}")
    polys = [parse_moment_query(q) if isinstance(q, str) else as_polynomial(q) for q in queries]
    groups: "OrderedDict[tuple, List[int]]" = OrderedDict()
    for idx, poly in enumerate(polys):
        groups.setdefault((poly.group, poly.dimension), []).append(idx)

    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(
        seed if isinstance(seed, int) else int(seed.integers(2 ** 63))
    )
    group_seeds = root.spawn(len(groups))
    records: List[Optional[MomentEstimate]] = [None] * len(polys)
    for (group, n), group_seed in zip(groups, group_seeds):
        members = groups[(group, n)]
        logger.info(f"Sampling {samples} Haar draws on {group} n={n} for {len(members)} queries")
        partials = run_partitioned(
            lambda rng, count: _accumulate([polys[i] for i in members], rng, count),
            samples, group_seed, threads,
        )
        for slot, idx in enumerate(members):
            mean, se = pooled_mean_se([p[slot] for p in partials])
            records[idx] = _record(polys[idx], mean, se, samples)
    return records


def default_moment_battery() -> List[MomentPolynomial]:
    """Ten index patterns at each of n = 4, 6, 9."""
    return [parse_moment_query(f"{p}@n={n}") for n in BATTERY_DIMENSIONS for p in BATTERY_PATTERNS]
