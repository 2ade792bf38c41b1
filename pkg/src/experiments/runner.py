# src/experiments/runner.py
"""Preset experiments.

Each preset is a small tool: a name, a description, and ``run(cfg)`` that
strings module operations together and returns results plus the acceptance
predicates the CLI turns into an exit code.
"""
import inspect
import logging
import math
from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel, Field

from src.bounds import (
    BoundReport,
    basic_proof_inputs,
    bound_from_audit,
    bound_ksphere,
    bound_mix,
    bound_uthm,
    ind_proof_f_bound,
    ksphere_proof_f_bound,
)
from src.bounds.theorems import THEOREMS, UTHM_CONSTANT
from src.errors import ConfigError, ExperimentError, SteinPairsError
from src.experiments.config import ExperimentConfig
from src.experiments.report import ExperimentReport
from src.haar import default_moment_battery, run_moment_checks, sample_orthogonal_batch
from src.linalg import diagonal_example_family, diagonal_example_gram, gram_matrix, load_family, mix_reduction
from src.pairs import (
    PairModel,
    ProjectionFamily,
    audit_pair,
    iid_law,
    make_iid_sum_pair,
    make_orthogonal_projection_pair,
    make_spherical_pair,
    make_unitary_projection_pair,
    random_family,
    spherical_law,
    trace_product_claim,
)
from src.parallel import spawn_streams
from src.stein import (
    SteinSolution,
    characterizing_check,
    derivative_bound_audit,
    hessian_norm_audit,
    kink_growth,
    make_test_function,
    stein_residual,
)
from src.transport import (
    CSV_HEADER,
    cloud_from_sampler,
    compare_to_bound,
    gaussian_sampler,
    model_sampler,
    target_sampler,
)
from src.transport.clouds import LawSampler

logger = logging.getLogger(__name__)

SE_TOLERANCE = 4.0
RESIDUAL_TOLERANCE = 0.02
RESIDUAL_REFERENCE_SAMPLES = 100_000
KINK_SAMPLES = 200_000
POINT_PAIR_STEP = 0.1
GRAM_EXACTNESS = 1e-12
IDENTITY_EXACTNESS = 1e-10
IDENTITY_DRAWS = 200
DEFAULT_IID_LAW = "rademacher"
DEFAULT_SPHERICAL_LAW = "sphere"
HAAR_HEADER = ["query", "exact", "estimate", "se", "pass"]


class PresetOutcome(BaseModel):
    results: Dict[str, object] = Field(default_factory=dict)
    predicates: Dict[str, bool] = Field(default_factory=dict)
    table_header: Optional[List[str]] = None
    table: Optional[List[List[str]]] = None


class Preset(BaseModel):
    name: str
    description: str

    def run(self, cfg: ExperimentConfig) -> PresetOutcome:
        raise NotImplementedError


# --- Shared builders ---

def _read_family(path: str, complex_valued: bool) -> ProjectionFamily:
    with open(path) as f:
        return ProjectionFamily.from_text(f.read(), complex_valued=complex_valued)


def build_model(cfg: ExperimentConfig, rng: np.random.Generator) -> PairModel:
    """The pair model a config names; projection models take the family file or a random orthonormal family."""
    if cfg.model == "iid_sum":
        return make_iid_sum_pair(iid_law(cfg.law or DEFAULT_IID_LAW, cfg.k), cfg.n)
    if cfg.model == "spherical":
        return make_spherical_pair(spherical_law(cfg.law or DEFAULT_SPHERICAL_LAW, cfg.n), cfg.k)
    complex_valued = cfg.model == "unitary_projection"
    if cfg.family:
        family = _read_family(cfg.family, complex_valued)
        if (family.k, family.n) != (cfg.k, cfg.n):
            raise ConfigError(
                f"Family file has k={family.k}, n={family.n} but the config says k={cfg.k}, n={cfg.n}", key="family"
            )
    else:
        family = random_family(cfg.k, cfg.n, rng, complex_valued=complex_valued)
    if complex_valued:
        return make_unitary_projection_pair(family)
    return make_orthogonal_projection_pair(family)


def _block_sizes(cfg: ExperimentConfig) -> List[int]:
    if any(x != int(x) for x in cfg.a):
        raise ConfigError(f"Block sizes must be integers, got {cfg.a}", key="a")
    return [int(x) for x in cfg.a]


def _within(value: float, limit: float, se: float) -> bool:
    return bool(value <= limit + SE_TOLERANCE * se)


def _norm_checks(model: PairModel, audit) -> Dict[str, object]:
    """Analytic surrogates against the norm estimates used in the matching proof."""
    s = audit.surrogates
    if model.kind == "orthogonal_projection" and s["f_norm"].type == "analytic":
        limit = ind_proof_f_bound(model.k, model.n)
        return {"surrogate": "f_norm", "value": s["f_norm"].value, "limit": limit,
                "passed": _within(s["f_norm"].value, limit, s["f_norm"].se)}
    if model.kind == "unitary_projection":
        value = s["gamma_norm"].value + s["lambda_norm"].value
        se = math.hypot(s["gamma_norm"].se, s["lambda_norm"].se)
        limit = UTHM_CONSTANT * model.k / model.n
        return {"surrogate": "gamma_norm+lambda_norm", "value": value, "limit": limit,
                "passed": _within(value, limit, se)}
    if model.kind == "spherical" and s["f_norm"].type == "analytic":
        limit = ksphere_proof_f_bound(model.k, model.n, model.variance_bound)
        return {"surrogate": "f_norm", "value": s["f_norm"].value, "limit": limit,
                "passed": _within(s["f_norm"].value, limit, s["f_norm"].se)}
    if model.kind == "iid_sum" and s["e_norm"].type == "analytic" and model.law.fourth_moment is not None:
        limit = basic_proof_inputs(model.n, model.k, model.law.fourth_moment, model.law.third_moment or 0.0)["e_norm"]
        return {"surrogate": "e_norm", "value": s["e_norm"].value, "limit": limit,
                "passed": _within(s["e_norm"].value, limit, s["e_norm"].se)}
    return {}


def _family_sampler(stacked: np.ndarray) -> LawSampler:
    """(Tr(B_1 M), ..., Tr(B_k M)) for Haar orthogonal M."""
    n = stacked.shape[1]

    def sample(rng: np.random.Generator, m: int) -> np.ndarray:
        return np.einsum("kab,sba->sk", stacked, sample_orthogonal_batch(n, m, rng))

    return sample


def _compare_rows(
    sampler: LawSampler,
    z_sampler: LawSampler,
    bound: BoundReport,
    cfg: ExperimentConfig,
    rng: np.random.Generator,
    outcome: PresetOutcome,
) -> None:
    """One comparison row per cloud size; each size gets its own substream of ``rng``."""
    rows = []
    for m, stream in zip(cfg.m, spawn_streams(rng, len(cfg.m))):
        x_stream, compare_stream = spawn_streams(stream, 2)
        x_cloud = cloud_from_sampler(sampler, m, x_stream, source="x")
        row = compare_to_bound(
            x_cloud, z_sampler, bound.value, cfg.reps, compare_stream,
            bound_se=bound.se or 0.0, directions=cfg.directions, threads=cfg.threads,
        )
        rows.append(row)
        outcome.predicates[f"w1 m={m}"] = row.passed
        if row.sliced_passed is not None:
            outcome.predicates[f"sliced m={m}"] = row.sliced_passed
    outcome.results["comparisons"] = [row.model_dump() for row in rows]
    outcome.table_header = list(CSV_HEADER)
    outcome.table = [row.csv_row() for row in rows]


# --- Presets ---

class HaarCheckPreset(Preset):
    name: str = "haar-check"
    description: str = "Weingarten oracle values against Monte Carlo estimates over Haar draws."

    def run(self, cfg):
        queries = cfg.query or default_moment_battery()
        estimates = run_moment_checks(queries, cfg.samples, cfg.seed, cfg.threads)
        outcome = PresetOutcome(results={"estimates": [e.model_dump() for e in estimates]})
        outcome.table_header = list(HAAR_HEADER)
        outcome.table = []
        for e in estimates:
            if e.within_tolerance is not None:
                outcome.predicates[e.query] = e.within_tolerance
            outcome.table.append([
                e.query,
                "" if e.exact is None else repr(e.exact),
                repr(e.estimate),
                repr(e.se),
                "" if e.within_tolerance is None else str(e.within_tolerance).lower(),
            ])
        return outcome


class PairAuditPreset(Preset):
    name: str = "pair-audit"
    description: str = "Linearity, conditional-moment surrogates and the resulting general bound for one pair model."

    def run(self, cfg):
        family_stream, audit_stream, claim_stream = spawn_streams(cfg.seed, 3)
        model = build_model(cfg, family_stream)
        epsilon = cfg.epsilon if model.continuous else None
        audit = audit_pair(model, cfg.samples, epsilon, audit_stream, cfg.inner_draws, cfg.threads)
        bound = bound_from_audit(audit)

        outcome = PresetOutcome()
        outcome.results["model"] = model.describe()
        outcome.results["audit"] = audit.to_record()
        outcome.results["slope_max_deviation"] = audit.slope_max_deviation
        outcome.results["covariance_deviation"] = audit.covariance_deviation().tolist()
        if audit.analytic_mean is not None:
            outcome.results["analytic_mean"] = audit.analytic_mean.model_dump()
        outcome.results["bound"] = bound.model_dump()
        outcome.results["warnings"] = list(audit.warnings)
        outcome.predicates["linearity"] = audit.linearity_holds()

        norms = _norm_checks(model, audit)
        if norms:
            outcome.results["norm_check"] = norms
            outcome.predicates["norm_bound"] = norms["passed"]
        if model.kind == "orthogonal_projection":
            claim, holds = trace_product_claim(model, cfg.samples, claim_stream)
            outcome.results["trace_product_claim"] = claim.model_dump()
            outcome.predicates["trace_product_claim"] = holds
        return outcome


class BoundPreset(Preset):
    name: str = "bound"
    description: str = "Evaluates one theorem from explicit inputs."

    def _mix_gram(self, cfg) -> np.ndarray:
        if cfg.family:
            with open(cfg.family) as f:
                return gram_matrix(load_family(f.read())).gram
        if cfg.a:
            return diagonal_example_gram(_block_sizes(cfg), cfg.n)
        return cfg.n * np.eye(cfg.k)

    def _arguments(self, cfg, theorem: str) -> Dict[str, object]:
        params = inspect.signature(THEOREMS[theorem]).parameters
        values = {name: getattr(cfg, name) for name in params if name not in ("a", "gram")}
        if "a" in params:
            values["a"] = cfg.a[0]
        if "gram" in params:
            values["gram"] = self._mix_gram(cfg)
        return values

    def run(self, cfg):
        theorem = cfg.theorem
        report = THEOREMS[theorem](**self._arguments(cfg, theorem))
        logger.info(f"{theorem} bound = {report.value:.6g}")
        return PresetOutcome(results={"bound": report.model_dump()})


class SteinCheckPreset(Preset):
    name: str = "stein-check"
    description: str = "Solves the Stein equation for a built-in function and audits the solution's derivatives."

    def run(self, cfg):
        constants_stream, point_stream, step_stream, char_stream = spawn_streams(cfg.seed, 4)
        function = make_test_function(cfg.g, cfg.k).with_constants(constants_stream)
        sol = SteinSolution.build(function, nodes=cfg.nodes, samples=cfg.samples, seed=cfg.seed)
        points = point_stream.standard_normal((cfg.points, cfg.k))
        outcome = PresetOutcome()
        outcome.results["constants"] = {"m1": function.m1, "m2": function.m2, "m3": function.m3}

        residuals = stein_residual(sol, points)
        tolerance = RESIDUAL_TOLERANCE * max(1.0, math.sqrt(RESIDUAL_REFERENCE_SAMPLES / sol.samples))
        max_residual = max(abs(r) for r in residuals)
        outcome.results["residuals"] = {"values": residuals, "max": max_residual, "tolerance": tolerance}
        outcome.predicates["residual"] = bool(max_residual <= tolerance)

        mean, se = characterizing_check(function, cfg.samples, char_stream)
        outcome.results["characterizing"] = {"mean": mean, "se": se}
        if function.has_hessian:
            outcome.predicates["characterizing"] = bool(abs(mean) <= SE_TOLERANCE * se)

        hessian = hessian_norm_audit(sol, points)
        outcome.results["hessian_norm"] = hessian.model_dump()
        if math.isfinite(hessian.m1):
            outcome.predicates["hessian_norm"] = hessian.passed

        pairs = [(p, p + POINT_PAIR_STEP * step_stream.standard_normal(cfg.k)) for p in points]
        derivative = derivative_bound_audit(sol, pairs, include_kink=False)
        outcome.results["derivative"] = derivative.model_dump()
        if derivative.passed is not None:
            outcome.predicates["hessian_lipschitz"] = derivative.passed

        kink = kink_growth(cfg.nodes, max(cfg.samples, KINK_SAMPLES), cfg.seed)
        outcome.results["kink"] = kink.model_dump()
        outcome.predicates["kink_growth"] = kink.increasing
        return outcome


class W1ComparePreset(Preset):
    name: str = "w1-compare"
    description: str = "Empirical W1 between a continuous pair model's law and its Gaussian target, against the theorem bound."

    def _bound(self, model: PairModel) -> BoundReport:
        if model.kind == "orthogonal_projection":
            return bound_mix(model.k, model.n, model.family.gram)
        if model.kind == "spherical":
            return bound_ksphere(model.k, model.n, model.variance_bound)
        return bound_uthm(model.k, model.n)

    def run(self, cfg):
        if cfg.model == "iid_sum":
            raise ConfigError("w1-compare needs a continuous model; the discrete bound is not a W1 bound", key="model")
        family_stream, compare_stream = spawn_streams(cfg.seed, 2)
        model = build_model(cfg, family_stream)
        bound = self._bound(model)
        outcome = PresetOutcome(results={"model": model.describe(), "bound": bound.model_dump()})
        _compare_rows(model_sampler(model), target_sampler(model), bound, cfg, compare_stream, outcome)
        return outcome


class DiagExamplePreset(Preset):
    name: str = "diag-example"
    description: str = "Nested diagonal family: Gram closed form, mixed-family bound, reduction identity and W1 check."

    def run(self, cfg):
        a, n = _block_sizes(cfg), cfg.n
        k = len(a)
        family = diagonal_example_family(a, n)
        gram = gram_matrix(family).gram
        closed = diagonal_example_gram(a, n)
        gram_gap = float(np.max(np.abs(gram - closed)))

        bound = bound_mix(k, n, gram)
        cap = math.sqrt(2.0) * k ** 1.5 / (n - 1)

        ortho, d = mix_reduction(family)
        identity_stream, compare_stream = spawn_streams(cfg.seed, 2)
        batch = sample_orthogonal_batch(n, IDENTITY_DRAWS, identity_stream)
        xa = np.real(np.einsum("kab,sba->sk", np.stack(ortho), batch))
        xb = np.einsum("kab,sba->sk", np.stack(family), batch)
        identity_gap = float(np.max(np.abs(xb - xa @ np.real(d).T)))

        outcome = PresetOutcome(results={
            "gram": gram.tolist(),
            "gram_max_gap": gram_gap,
            "bound": bound.model_dump(),
            "bound_cap": cap,
            "reduction_matrix": np.real(d).tolist(),
            "reduction_max_gap": identity_gap,
        })
        outcome.predicates["gram_closed_form"] = bool(gram_gap <= GRAM_EXACTNESS)
        outcome.predicates["bound_cap"] = bool(bound.value <= cap)
        outcome.predicates["reduction_identity"] = bool(identity_gap <= IDENTITY_EXACTNESS)
        x_sampler, z_sampler = _family_sampler(np.stack(family)), gaussian_sampler(k, closed / n)
        _compare_rows(x_sampler, z_sampler, bound, cfg, compare_stream, outcome)
        return outcome


PRESETS: Dict[str, Preset] = {
    preset.name: preset
    for preset in (
        HaarCheckPreset(),
        PairAuditPreset(),
        BoundPreset(),
        SteinCheckPreset(),
        W1ComparePreset(),
        DiagExamplePreset(),
    )
}


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Runs one preset; module errors come back as ``ExperimentError`` naming the experiment."""
    missing = cfg.missing_keys()
    if missing:
        raise ConfigError(f"Missing required keys for {cfg.experiment}: {', '.join(missing)}", key=missing[0])
    preset = PRESETS[cfg.experiment]
    logger.info(f"Running {preset.name} with seed={cfg.seed}, threads={cfg.threads}")
    try:
        outcome = preset.run(cfg)
    except ConfigError:
        raise
    except SteinPairsError as e:
        logger.error(f"{preset.name} failed: {e}")
        raise ExperimentError(preset.name, e) from e

    predicates = {name: bool(value) for name, value in outcome.predicates.items()}
    report = ExperimentReport(
        experiment=cfg.experiment,
        config=cfg.to_record(),
        seed=cfg.seed,
        threads=cfg.threads,
        results=outcome.results,
        predicates=predicates,
        passed=all(predicates.values()),
        table_header=outcome.table_header,
        table=outcome.table,
    )
    failed = [name for name, value in predicates.items() if not value]
    if failed:
        logger.warning(f"{preset.name}: failed predicates {failed}")
    else:
        logger.info(f"{preset.name}: all {len(predicates)} predicates hold")
    return report
