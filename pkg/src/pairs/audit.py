# src/pairs/audit.py
import logging
from typing import Callable, Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field

from src.errors import ParameterError, RankError
from src.pairs.base import PairModel
from src.pairs.models import realify_vectors
from src.parallel import Seed, chunked, root_seed, run_partitioned

logger = logging.getLogger(__name__)

DEFAULT_INNER_DRAWS = 8
MIN_AUDIT_SAMPLES = 1_000
SE_TOLERANCE = 4.0
SLOPE_TOLERANCE = 0.05
LINEARITY_EPSILON = 1e-3
SECOND_MOMENT_EPSILON = 1e-2


# --- Records ---

class ScalarEstimate(BaseModel):
    value: float
    se: float


class SurrogateValue(ScalarEstimate):
    type: Literal["analytic", "jensen"] = Field(
        description="analytic: per-sample closed form; jensen: unconditioned per-sample matrix (upper bound)."
    )


class MatrixEstimate(BaseModel):
    mean: List[List[float]]
    se: List[List[float]]

    @classmethod
    def from_arrays(cls, mean: np.ndarray, se: np.ndarray) -> "MatrixEstimate":
        return cls(mean=np.asarray(mean).tolist(), se=np.asarray(se).tolist())

    def max_gap(self, other: "MatrixEstimate") -> Tuple[float, float]:
        """Largest entrywise |difference| and the combined SE at that entry."""
        diff = np.abs(np.asarray(self.mean) - np.asarray(other.mean))
        se = np.hypot(np.asarray(self.se), np.asarray(other.se))
        idx = np.unravel_index(np.argmax(diff - SE_TOLERANCE * se), diff.shape)
        return float(diff[idx]), float(se[idx])


class ConditionalAudit(BaseModel):
    """Simulation audit of the conditional-moment conditions of one pair model."""
    model: str
    k: int
    n: int
    epsilon: Optional[float] = None
    lambda_value: float
    sigma2: float
    samples: int
    inner_draws: int
    seed: Optional[int] = None
    slope_matrix: List[List[float]] = Field(description="Regression of (X' - X)/lambda on X; realified for complex models.")
    slope_se: List[List[float]]
    surrogates: Dict[str, SurrogateValue] = Field(default_factory=dict)
    third_moment: ScalarEstimate = Field(description="E|X' - X|^3 / lambda.")
    difference_estimator: MatrixEstimate = Field(description="(1/2 lambda) mean (X'-X)(X'-X)^T - sigma^2 I.")
    analytic_mean: Optional[MatrixEstimate] = None
    second_moment: MatrixEstimate = Field(description="Empirical E[X X^T]; realified for complex models.")
    warnings: List[str] = Field(default_factory=list)

    @property
    def slope_max_deviation(self) -> float:
        slope = np.asarray(self.slope_matrix)
        return float(np.max(np.abs(slope + np.eye(slope.shape[0]))))

    def _surrogate(self, name: str) -> Optional[float]:
        entry = self.surrogates.get(name)
        return entry.value if entry else None

    @property
    def e_norm_surrogate(self) -> Optional[float]:
        return self._surrogate("e_norm")

    @property
    def f_norm_surrogate(self) -> Optional[float]:
        return self._surrogate("f_norm")

    @property
    def gamma_norm(self) -> Optional[float]:
        return self._surrogate("gamma_norm")

    @property
    def lambda_norm(self) -> Optional[float]:
        return self._surrogate("lambda_norm")

    @property
    def third_moment_over_lambda(self) -> float:
        return self.third_moment.value

    def linearity_holds(self, tolerance: float = SLOPE_TOLERANCE) -> bool:
        return self.slope_max_deviation <= tolerance

    def covariance_deviation(self) -> np.ndarray:
        """E[X X^T] - sigma^2 I, which the E/F identity says equals the mean of E (or F)."""
        second = np.asarray(self.second_moment.mean)
        return second - self.sigma2 * np.eye(second.shape[0])

    def to_record(self) -> Dict[str, object]:
        return {
            "model": self.model,
            "k": self.k,
            "n": self.n,
            "epsilon": self.epsilon,
            "slope_matrix": self.slope_matrix,
            "surrogates": {name: s.model_dump() for name, s in self.surrogates.items()},
            "third_moment": self.third_moment.model_dump(),
            "samples": self.samples,
            "seed": self.seed,
        }


# --- Accumulation ---

class _Sums:
    """Running sums and sums of squares, merged in partition order."""

    def __init__(self):
        self.count = 0
        self.first: Dict[str, np.ndarray] = {}
        self.second: Dict[str, np.ndarray] = {}

    def add(self, name: str, values: np.ndarray) -> None:
        s, s2 = values.sum(axis=0), (np.abs(values) ** 2).sum(axis=0)
        if name in self.first:
            self.first[name] = self.first[name] + s
            self.second[name] = self.second[name] + s2
        else:
            self.first[name], self.second[name] = s, s2

    def add_raw(self, name: str, value: np.ndarray) -> None:
        self.first[name] = self.first.get(name, 0) + value

    def merge(self, other: "_Sums") -> "_Sums":
        self.count += other.count
        for name, value in other.first.items():
            self.first[name] = self.first.get(name, 0) + value
            if name in other.second:
                self.second[name] = self.second.get(name, 0) + other.second[name]
        return self

    def mean_se(self, name: str) -> Tuple[np.ndarray, np.ndarray]:
        n = self.count
        mean = self.first[name] / n
        var = np.maximum(self.second[name] / n - np.abs(mean) ** 2, 0.0) * n / max(n - 1, 1)
        return mean, np.sqrt(var / n)


def _hs_norms(mats: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(np.abs(mats) ** 2, axis=(-2, -1)))


def _outer(delta: np.ndarray) -> np.ndarray:
    return np.einsum("si,sj->sij", delta, delta)


def _audit_chunk(
    model: PairModel, rng: np.random.Generator, size: int, epsilon: Optional[float], inner_draws: int, sums: _Sums
) -> None:
    lam = model.lambda_of(epsilon)
    states = model.draw_states(rng, size, epsilon)
    x = states["x"]
    real_x = realify_vectors(x) if model.complex_valued else x
    d = real_x.shape[1]

    mean_increment = np.zeros((size, d))
    second = np.zeros((size, d, d))
    third = np.zeros(size)
    draws = 0
    for _ in range(inner_draws):
        for delta in model.increment_pair(states, rng, epsilon):
            if delta is None:
                continue
            real_delta = realify_vectors(delta) if model.complex_valued else delta
            mean_increment += real_delta
            second += _outer(real_delta)
            third += np.sum(real_delta ** 2, axis=1) ** 1.5
            draws += 1
    mean_increment /= draws * lam
    second /= draws * 2.0 * lam
    third /= draws * lam

    sums.count += size
    sums.add_raw("xx", real_x.T @ real_x)
    sums.add_raw("xy", real_x.T @ mean_increment)
    sums.add_raw("yy", np.sum(mean_increment ** 2, axis=0))
    sums.add("second_moment", _outer(real_x))
    sums.add("difference", second - model.sigma2 * np.eye(d))
    sums.add("third", third)

    analytic = model.analytic_matrices(states)
    if analytic is None:
        # Jensen: ||E[V | X]|| <= E[||V|| | X] for the unconditioned per-sample matrix
        sums.add("jensen_norm", _hs_norms(second - model.sigma2 * np.eye(d)))
        return
    if "E" in analytic:
        sums.add("e_norm", _hs_norms(analytic["E"]))
        sums.add("analytic", analytic["E"])
        return
    sums.add("f_norm", _hs_norms(analytic["F"]))
    sums.add("analytic", analytic["F"])
    if "gamma" in analytic:
        sums.add("gamma_norm", _hs_norms(analytic["gamma"]))
        sums.add("lambda_norm", _hs_norms(analytic["lambda"]))


def _slope(sums: _Sums) -> Tuple[np.ndarray, np.ndarray]:
    xx, xy, yy = sums.first["xx"], sums.first["xy"], sums.first["yy"]
    d = xx.shape[0]
    if np.linalg.matrix_rank(xx) < d:
        raise RankError(f"States span fewer than {d} directions; the slope of X' - X on X is undefined")
    inv = np.linalg.inv(xx)
    beta = inv @ xy
    rss = yy - 2.0 * np.einsum("ij,ij->j", beta, xy) + np.einsum("ij,ik,kj->j", beta, xx, beta)
    dof = max(sums.count - d, 1)
    se = np.sqrt(np.maximum(rss, 0.0) / dof)[np.newaxis, :] * np.sqrt(np.diag(inv))[:, np.newaxis]
    return beta.T, se.T


def audit_pair(
    model: PairModel,
    samples: int,
    epsilon: Optional[float] = None,
    rng: Seed = 0,
    inner_draws: int = DEFAULT_INNER_DRAWS,
    threads: Optional[int] = None,
) -> ConditionalAudit:
    """Slope, E/F/Gamma/Lambda surrogates and third moments of a pair model.

    Each state gets ``inner_draws`` independent increments; continuous models
    also use the antithetic -eps partner of every draw, which has the same
    conditional mean and cancels the O(eps) term of the increment.
    """
    model.check_epsilon(epsilon)
    if samples < 2:
        raise ParameterError(f"An audit needs at least two samples, got {samples}")
    if not model.supports_inner_draws:
        inner_draws = 1
    warnings: List[str] = []
    if samples < MIN_AUDIT_SAMPLES:
        msg = f"Only {samples} samples (< {MIN_AUDIT_SAMPLES}); audit precision is limited"
        logger.warning(msg)
        warnings.append(msg)

    def work(stream: np.random.Generator, count: int) -> _Sums:
        sums = _Sums()
        for size in chunked(count, model.chunk_size):
            _audit_chunk(model, stream, size, epsilon, inner_draws, sums)
        return sums

    logger.info(f"Auditing {model.kind} pair: k={model.k}, n={model.n}, eps={epsilon}, samples={samples}")
    partials = run_partitioned(work, samples, rng, threads)
    sums = partials[0]
    for other in partials[1:]:
        sums.merge(other)

    slope, slope_se = _slope(sums)
    surrogates: Dict[str, SurrogateValue] = {}
    for name in ("e_norm", "f_norm", "gamma_norm", "lambda_norm"):
        if name in sums.first:
            mean, se = sums.mean_se(name)
            surrogates[name] = SurrogateValue(type="analytic", value=float(mean), se=float(se))
    if "jensen_norm" in sums.first:
        mean, se = sums.mean_se("jensen_norm")
        key = "f_norm" if model.continuous else "e_norm"
        surrogates[key] = SurrogateValue(type="jensen", value=float(mean), se=float(se))

    third_mean, third_se = sums.mean_se("third")
    analytic_mean = None
    if "analytic" in sums.first:
        analytic_mean = MatrixEstimate.from_arrays(*sums.mean_se("analytic"))
    audit = ConditionalAudit(
        model=model.kind,
        k=model.k,
        n=model.n,
        epsilon=epsilon,
        lambda_value=model.lambda_of(epsilon),
        sigma2=model.sigma2,
        samples=samples,
        inner_draws=inner_draws,
        seed=root_seed(rng),
        slope_matrix=slope.tolist(),
        slope_se=slope_se.tolist(),
        surrogates=surrogates,
        third_moment=ScalarEstimate(value=float(third_mean), se=float(third_se)),
        difference_estimator=MatrixEstimate.from_arrays(*sums.mean_se("difference")),
        analytic_mean=analytic_mean,
        second_moment=MatrixEstimate.from_arrays(*sums.mean_se("second_moment")),
        warnings=warnings,
    )
    logger.info(f"{model.kind} audit: max |slope + I| = {audit.slope_max_deviation:.4f}")
    return audit


# --- Further checks ---

def exchangeability_gap(
    model: PairModel,
    statistic: Callable[[np.ndarray, np.ndarray], np.ndarray],
    samples: int,
    rng: np.random.Generator,
    epsilon: Optional[float] = None,
) -> Tuple[float, float]:
    """Mean and SE of t(X, X') - t(X', X); zero in expectation for an exchangeable pair."""
    values = []
    for size in chunked(samples, model.chunk_size):
        x, x_prime = model.sample_pairs(rng, size, epsilon)
        values.append(np.asarray(statistic(x, x_prime)) - np.asarray(statistic(x_prime, x)))
    v = np.concatenate(values)
    return float(np.mean(v)), float(np.std(v, ddof=1) / np.sqrt(v.shape[0]))


class EpsilonConsistency(BaseModel):
    epsilon: float
    at_epsilon: MatrixEstimate
    at_double: MatrixEstimate
    extrapolated: List[List[float]] = Field(description="(4 S(eps) - S(2 eps)) / 3.")
    max_gap: float
    gap_se: float
    bias_allowance: float
    consistent: bool


def epsilon_consistency(
    model: PairModel,
    samples: int,
    epsilon: float,
    rng: Seed = 0,
    inner_draws: int = DEFAULT_INNER_DRAWS,
    threads: Optional[int] = None,
) -> EpsilonConsistency:
    """Compares the second-moment difference estimators at eps and 2 eps.

    Their bias is O(eps^2), so the two must agree within sampling error plus
    a bias allowance of (2 eps)^2 times the scale of the estimate.
    """
    if not model.continuous:
        raise ParameterError("epsilon consistency only applies to continuous pairs")
    streams = np.random.SeedSequence(rng).spawn(2) if isinstance(rng, int) else rng.spawn(2)
    first = audit_pair(model, samples, epsilon, streams[0], inner_draws, threads).difference_estimator
    second = audit_pair(model, samples, 2 * epsilon, streams[1], inner_draws, threads).difference_estimator
    gap, se = first.max_gap(second)
    scale = 1.0 + float(np.max(np.abs(np.asarray(first.mean))))
    allowance = (2 * epsilon) ** 2 * scale
    extrapolated = (4 * np.asarray(first.mean) - np.asarray(second.mean)) / 3
    return EpsilonConsistency(
        epsilon=epsilon,
        at_epsilon=first,
        at_double=second,
        extrapolated=extrapolated.tolist(),
        max_gap=gap,
        gap_se=se,
        bias_allowance=allowance,
        consistent=gap <= SE_TOLERANCE * se + allowance,
    )


CLAIM_LIMIT = 2.0


def trace_product_claim(
    model: PairModel, samples: int, rng: np.random.Generator
) -> Tuple[MatrixEstimate, bool]:
    """E[(Tr(A_i M A_j M) - delta_ij)^2] for a projection pair; each entry is at most 2 for Haar M."""
    if samples < 2:
        raise ParameterError(f"Need at least two samples, got {samples}")
    if not hasattr(model, "trace_products"):
        raise ParameterError(f"The {model.kind} pair has no trace products")
    total = np.zeros((model.k, model.k))
    total_sq = np.zeros((model.k, model.k))
    for size in chunked(samples, model.chunk_size):
        t = model.trace_products(model.draw_states(rng, size)["m"])
        dev = np.abs(t - np.eye(model.k)) ** 2
        total += dev.sum(axis=0)
        total_sq += (dev ** 2).sum(axis=0)
    mean = total / samples
    var = np.maximum(total_sq / samples - mean ** 2, 0.0) * samples / (samples - 1)
    se = np.sqrt(var / samples)
    holds = bool(np.all(mean <= CLAIM_LIMIT + SE_TOLERANCE * se))
    return MatrixEstimate.from_arrays(mean, se), holds
