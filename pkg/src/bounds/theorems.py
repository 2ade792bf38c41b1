# src/bounds/theorems.py
"""Right-hand sides of the Wasserstein error bounds.

Every function takes plain numbers or ``BoundInput`` objects (to carry
provenance and a standard error) and returns a ``BoundReport``. Monte Carlo
standard errors are propagated through the coefficient of each input, which
is exact here because every bound is linear in its estimated quantities.
"""
import logging
import math
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np

from src.bounds.reports import BoundInput, BoundReport
from src.errors import InconsistentMomentsError, InvalidGramError, ParameterError
from src.linalg.gram import GramData
from src.linalg.matrices import op_norm

logger = logging.getLogger(__name__)

SQRT_2PI = math.sqrt(2.0 * math.pi)
GRAM_TOL = 1e-8
UTHM_CONSTANT = 3.0
UTHM_MIN_N = 4

Scalar = Union[float, int, BoundInput]


def _input(x: Scalar) -> BoundInput:
    return x if isinstance(x, BoundInput) else BoundInput.of(x)


def _inputs(**named: Scalar) -> Dict[str, BoundInput]:
    return {name: _input(v) for name, v in named.items()}


def _nonnegative(inputs: Dict[str, BoundInput], *names: str) -> None:
    for name in names:
        if inputs[name].value < 0:
            raise ParameterError(f"{name} must be nonnegative, got {inputs[name].value}")


def _propagated_se(terms: Sequence[Tuple[float, BoundInput]]) -> Optional[float]:
    if all(inp.se is None for _, inp in terms):
        return None
    return math.sqrt(sum((coef * inp.se) ** 2 for coef, inp in terms if inp.se is not None))


# --- General theorems ---

def bound_discrete(
    sigma: Scalar, m1: Scalar, m2: Scalar, lam: Scalar, e_norm: Scalar, third_moment: Scalar
) -> BoundReport:
    """(M1/sigma) E||E|| + (sqrt(2 pi) / (24 sigma)) (M2/lambda) E|X' - X|^3."""
    inputs = _inputs(sigma=sigma, m1=m1, m2=m2, lam=lam, e_norm=e_norm, third_moment=third_moment)
    s, l = inputs["sigma"].value, inputs["lam"].value
    if s <= 0 or l <= 0:
        raise ParameterError(f"sigma and lambda must be positive, got sigma={s}, lambda={l}")
    _nonnegative(inputs, "m1", "m2", "e_norm", "third_moment")
    first = inputs["m1"].value / s
    second = SQRT_2PI / (24.0 * s) * inputs["m2"].value / l
    value = first * inputs["e_norm"].value + second * inputs["third_moment"].value
    return BoundReport(
        theorem="discrete",
        inputs=inputs,
        value=value,
        formula_text="(m1/sigma)*e_norm + (sqrt(2*pi)/(24*sigma))*(m2/lambda)*third_moment",
        se=_propagated_se([(first, inputs["e_norm"]), (second, inputs["third_moment"])]),
    )


def bound_cont(sigma: Scalar, f_norm: Scalar) -> BoundReport:
    inputs = _inputs(sigma=sigma, f_norm=f_norm)
    s = inputs["sigma"].value
    if s <= 0:
        raise ParameterError(f"sigma must be positive, got {s}")
    _nonnegative(inputs, "f_norm")
    return BoundReport(
        theorem="cont",
        inputs=inputs,
        value=inputs["f_norm"].value / s,
        formula_text="f_norm/sigma",
        se=_propagated_se([(1.0 / s, inputs["f_norm"])]),
    )


def bound_complex(gamma_norm: Scalar, lambda_norm: Scalar) -> BoundReport:
    inputs = _inputs(gamma_norm=gamma_norm, lambda_norm=lambda_norm)
    _nonnegative(inputs, "gamma_norm", "lambda_norm")
    return BoundReport(
        theorem="complex",
        inputs=inputs,
        value=inputs["gamma_norm"].value + inputs["lambda_norm"].value,
        formula_text="gamma_norm + lambda_norm",
        se=_propagated_se([(1.0, inputs["gamma_norm"]), (1.0, inputs["lambda_norm"])]),
    )


def bound_cont_complex(
    gamma_norm: Scalar, lambda_norm: Scalar, f_norm: Optional[Scalar] = None
) -> BoundReport:
    """The complex case read in R^{2k}: sigma^2 = 1/2, so the bound is sqrt(2) E||F||.

    Without a realified F estimate, ||F|| <= (||Gamma|| + ||Lambda||)/sqrt(2)
    is used and the value coincides with ``bound_complex``.
    """
    inputs = _inputs(gamma_norm=gamma_norm, lambda_norm=lambda_norm)
    _nonnegative(inputs, "gamma_norm", "lambda_norm")
    notes = []
    if f_norm is None:
        g, l = inputs["gamma_norm"], inputs["lambda_norm"]
        se = math.hypot(g.se or 0.0, l.se or 0.0) / math.sqrt(2.0)
        f = BoundInput(
            value=(g.value + l.value) / math.sqrt(2.0),
            provenance="analytic" if g.provenance == l.provenance == "analytic" else "monte-carlo",
            se=se or None,
        )
        notes.append("f_norm taken as (gamma_norm + lambda_norm)/sqrt(2)")
    else:
        f = _input(f_norm)
    inputs["f_norm"] = f
    _nonnegative(inputs, "f_norm")
    return BoundReport(
        theorem="cont_complex",
        inputs=inputs,
        value=math.sqrt(2.0) * f.value,
        formula_text="f_norm/sqrt(1/2)",
        notes=notes,
        se=_propagated_se([(math.sqrt(2.0), f)]),
    )


# --- Applications ---

def bound_basic(n: int, k: int, m1: Scalar, m2: Scalar, fourth_moment: Scalar, third_moment: Scalar) -> BoundReport:
    """Normalized sums of n i.i.d. vectors with identity covariance."""
    if n < 1 or k < 1:
        raise ParameterError(f"n and k must be positive, got n={n}, k={k}")
    inputs = _inputs(n=n, k=k, m1=m1, m2=m2, fourth_moment=fourth_moment, third_moment=third_moment)
    _nonnegative(inputs, "m1", "m2", "third_moment")
    fourth = inputs["fourth_moment"].value
    if fourth < k:
        raise InconsistentMomentsError(f"E|Y|^4 = {fourth} is below k = {k}, impossible with identity covariance")
    root_n = math.sqrt(n)
    value = (
        inputs["m1"].value / (2.0 * root_n) * math.sqrt(fourth - k)
        + SQRT_2PI / (3.0 * root_n) * inputs["m2"].value * inputs["third_moment"].value
    )
    return BoundReport(
        theorem="basic",
        inputs=inputs,
        value=value,
        formula_text="(m1/(2*sqrt(n)))*sqrt(fourth_moment - k) + (sqrt(2*pi)/(3*sqrt(n)))*m2*third_moment",
    )


def basic_proof_inputs(n: int, k: int, fourth_moment: float, third_moment: float) -> Dict[str, float]:
    """E||E|| and E|W' - W|^3 as bounded in the i.i.d. proof, ready for ``bound_discrete``."""
    if fourth_moment < k:
        raise InconsistentMomentsError(f"E|Y|^4 = {fourth_moment} is below k = {k}")
    lam = 1.0 / n
    return {
        "sigma": 1.0,
        "lam": lam,
        "e_norm": math.sqrt(fourth_moment - k) / (2.0 * math.sqrt(n)),
        "third_moment": lam * 8.0 * third_moment / math.sqrt(n),
    }


def bound_ksphere(k: int, n: int, a: Scalar) -> BoundReport:
    """First k coordinates of a spherically symmetric vector with Var(|Y|^2) <= a."""
    if n < 2:
        raise ParameterError(f"n must be at least 2, got {n}")
    inputs = _inputs(k=k, n=n, a=a)
    _nonnegative(inputs, "a")
    value = k * (math.sqrt(inputs["a"].value) + 2.0) / (n - 1)
    return BoundReport(theorem="ksphere", inputs=inputs, value=value, formula_text="k*(sqrt(a) + 2)/(n - 1)")


def ksphere_proof_f_bound(k: int, n: int, a: float) -> float:
    """E||F|| <= (sqrt(k)(sqrt(a) + 1) + k)/(n - 1), before sqrt(k) <= k is used."""
    return (math.sqrt(k) * (math.sqrt(a) + 1.0) + k) / (n - 1)


def ind_proof_f_bound(k: int, n: int) -> float:
    """E||F|| <= sqrt(2) k/(n - 1) for an orthonormal family."""
    return math.sqrt(2.0) * k / (n - 1)


def _covariance(gram: Union[GramData, np.ndarray], n: int) -> np.ndarray:
    g = gram.gram if isinstance(gram, GramData) else np.asarray(gram)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise InvalidGramError(f"Gram matrix must be square, got shape {g.shape}")
    if np.iscomplexobj(g):
        if np.max(np.abs(np.imag(g))) > GRAM_TOL * n:
            raise InvalidGramError("The mixed-family bound takes a real Gram matrix")
        g = np.real(g)
    if np.max(np.abs(g - g.T)) > GRAM_TOL * n:
        raise InvalidGramError("Gram matrix is not symmetric")
    if np.max(np.abs(np.diag(g) - n)) > GRAM_TOL * n:
        raise InvalidGramError(f"Gram diagonal must equal n = {n}, got {np.diag(g).tolist()}")
    lowest = float(np.min(np.linalg.eigvalsh((g + g.T) / 2.0)))
    if lowest < -GRAM_TOL * n:
        raise InvalidGramError(f"Gram matrix is not positive semidefinite (smallest eigenvalue {lowest:.3g})")
    return g / n


def bound_mix(k: int, n: int, gram: Union[GramData, np.ndarray]) -> BoundReport:
    """Linearly independent family with ||B_i||^2 = n and covariance C = Gram/n."""
    if n < 2:
        raise ParameterError(f"n must be at least 2, got {n}")
    c = _covariance(gram, n)
    if c.shape[0] != k:
        raise InvalidGramError(f"Gram matrix is {c.shape[0]} x {c.shape[0]}, expected k = {k}")
    c_norm = op_norm(c)
    value = k * math.sqrt(2.0 * c_norm) / (n - 1)
    return BoundReport(
        theorem="mix",
        inputs={
            "k": BoundInput.of(k),
            "n": BoundInput.of(n),
            "gram": BoundInput.of(c * n),
            "c_op_norm": BoundInput.of(c_norm, provenance="analytic"),
        },
        value=value,
        formula_text="k*sqrt(2*||C||_op)/(n - 1)",
    )


def uthm_proof_constant(n: int) -> float:
    """c(n) with E||Gamma|| + E||Lambda|| <= c(n) k/n from the explicit proof estimates."""
    if n < 2:
        raise ParameterError(f"n must be at least 2, got {n}")
    gamma, lam = uthm_proof_norms(1, n)
    return n * (gamma + lam)


def uthm_proof_norms(k: int, n: int) -> Tuple[float, float]:
    """Upper bounds on E||Gamma|| and E||Lambda|| for an orthonormal complex family."""
    gamma = k / ((n - 1.0) * (n + 1.0)) * math.sqrt(5.0 + 2.0 / (n - 1.0))
    lam = k / (n - 1.0) * math.sqrt(2.0 + 2.0 * (n * n + 5.0) / ((n - 1.0) * (n + 1.0) ** 2))
    return gamma, lam


def bound_uthm(k: int, n: int) -> BoundReport:
    if n < UTHM_MIN_N:
        raise ParameterError(f"The unitary bound with constant 3 needs n >= {UTHM_MIN_N}, got {n}")
    if k < 1:
        raise ParameterError(f"k must be positive, got {k}")
    return BoundReport(
        theorem="uthm",
        inputs=_inputs(k=k, n=n),
        value=UTHM_CONSTANT * k / n,
        formula_text="3*k/n",
        notes=[
            "asymptotic constant sqrt(2)",
            f"finite-n proof constant c({n}) = {uthm_proof_constant(n):.6f}",
        ],
    )


# --- Audits to bounds ---

def bound_from_audit(audit, m1: float = 1.0, m2: float = 1.0) -> BoundReport:
    """Feeds the surrogates of a ``ConditionalAudit`` into the matching general theorem."""
    def mc(estimate) -> BoundInput:
        return BoundInput(value=estimate.value, provenance="monte-carlo", se=estimate.se)

    sigma = math.sqrt(audit.sigma2)
    if audit.epsilon is None:
        third = audit.third_moment
        lam = audit.lambda_value
        third_input = BoundInput(value=third.value * lam, provenance="monte-carlo", se=third.se * lam)
        return bound_discrete(
            sigma, m1, m2, BoundInput.of(lam, "analytic"), mc(audit.surrogates["e_norm"]), third_input
        )
    if "gamma_norm" in audit.surrogates:
        return bound_cont_complex(
            mc(audit.surrogates["gamma_norm"]),
            mc(audit.surrogates["lambda_norm"]),
            mc(audit.surrogates["f_norm"]),
        )
    return bound_cont(sigma, mc(audit.surrogates["f_norm"]))


THEOREMS = {
    "discrete": bound_discrete,
    "cont": bound_cont,
    "cont_complex": bound_cont_complex,
    "complex": bound_complex,
    "basic": bound_basic,
    "ksphere": bound_ksphere,
    "mix": bound_mix,
    "uthm": bound_uthm,
}
