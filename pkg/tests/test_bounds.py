import math

import numpy as np
import pytest

from src.bounds import (
    BoundInput,
    BoundReport,
    basic_proof_inputs,
    bound_basic,
    bound_complex,
    bound_cont,
    bound_cont_complex,
    bound_discrete,
    bound_from_audit,
    bound_ksphere,
    bound_mix,
    bound_uthm,
    ind_proof_f_bound,
    ksphere_proof_f_bound,
    uthm_proof_constant,
    uthm_proof_norms,
)
from src.errors import InconsistentMomentsError, InvalidGramError, ParameterError
from src.linalg.gram import diagonal_example_family, gram_matrix
from src.pairs import audit_pair, iid_law, make_iid_sum_pair, make_unitary_projection_pair, random_family


# --- General theorems ---

def test_discrete_arithmetic():
    assert bound_discrete(1.0, 0.0, 0.0, 0.5, 0.3, 0.2).value == 0.0
    assert bound_discrete(1.0, 1.0, 0.0, 0.5, 0.3, 0.2).value == pytest.approx(0.3)
    report = bound_discrete(2.0, 1.0, 3.0, 0.1, 0.4, 0.05)
    expected = 0.4 / 2.0 + math.sqrt(2 * math.pi) / 48.0 * 30.0 * 0.05
    assert report.value == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("sigma,lam", [(0.0, 1.0), (-1.0, 1.0), (1.0, 0.0)])
def test_discrete_rejects_nonpositive_scales(sigma, lam):
    with pytest.raises(ParameterError):
        bound_discrete(sigma, 1.0, 1.0, lam, 0.1, 0.1)


def test_cont_and_complex_arithmetic():
    assert bound_cont(1.0, 0.0).value == 0.0
    assert bound_cont(2.0, 0.6).value == pytest.approx(bound_cont(1.0, 0.6).value / 2)
    assert bound_complex(0.0, 0.0).value == 0.0
    assert bound_complex(0.1, 0.2).value == pytest.approx(0.3)
    with pytest.raises(ParameterError):
        bound_cont(1.0, -0.1)


def test_cont_complex_defaults_to_complex_value():
    default = bound_cont_complex(0.1, 0.2)
    assert default.value == pytest.approx(bound_complex(0.1, 0.2).value, rel=1e-14)
    assert default.notes
    # sqrt(2)||F|| <= ||Gamma|| + ||Lambda|| for the realified F
    tighter = bound_cont_complex(0.1, 0.2, f_norm=0.15)
    assert tighter.value == pytest.approx(math.sqrt(2) * 0.15)
    assert tighter.value <= default.value


def test_monte_carlo_se_propagates():
    f = BoundInput(value=0.4, provenance="monte-carlo", se=0.01)
    report = bound_cont(2.0, f)
    assert report.se == pytest.approx(0.005)
    assert report.inputs["f_norm"].provenance == "monte-carlo"
    assert bound_cont(2.0, 0.4).se is None


# --- Applications ---

def test_basic_rademacher_closed_form():
    law = iid_law("rademacher", 3)
    n, k, m1, m2 = 25, 3, 1.5, 0.7
    report = bound_basic(n, k, m1, m2, law.fourth_moment, law.third_moment)
    expected = m1 / (2 * 5) * math.sqrt(k * k - k) + math.sqrt(2 * math.pi) / (3 * 5) * m2 * k ** 1.5
    assert report.value == pytest.approx(expected, abs=1e-12)


def test_basic_gaussian_fourth_moment():
    law = iid_law("gaussian", 2)
    assert law.fourth_moment == pytest.approx(8.0)
    report = bound_basic(16, 2, 1.0, 0.0, law.fourth_moment, law.third_moment)
    assert report.value == pytest.approx(math.sqrt(6.0) / 8.0, abs=1e-12)


def test_basic_rejects_inconsistent_moments():
    with pytest.raises(InconsistentMomentsError):
        bound_basic(10, 3, 1.0, 1.0, 2.0, 1.0)


@pytest.mark.parametrize("name", ["gaussian", "rademacher"])
def test_basic_reproduced_by_discrete_with_proof_inputs(name):
    law = iid_law(name, 2)
    n, m1, m2 = 40, 1.2, 0.8
    proof = basic_proof_inputs(n, 2, law.fourth_moment, law.third_moment)
    general = bound_discrete(m1=m1, m2=m2, **proof)
    assert general.value == pytest.approx(bound_basic(n, 2, m1, m2, law.fourth_moment, law.third_moment).value, rel=1e-12)


def test_ksphere_values_and_monotonicity():
    assert bound_ksphere(2, 101, 4.0).value == pytest.approx(0.08)
    assert bound_ksphere(3, 11, 0.0).value == pytest.approx(2 * 3 / 10)
    base = bound_ksphere(2, 50, 1.0).value
    assert bound_ksphere(2, 50, 2.0).value > base
    assert bound_ksphere(3, 50, 1.0).value > base
    assert bound_ksphere(2, 60, 1.0).value < base
    with pytest.raises(ParameterError):
        bound_ksphere(2, 1, 0.0)


@pytest.mark.parametrize("k,n,a", [(1, 10, 0.0), (2, 40, 80.0), (5, 100, 2.0)])
def test_ksphere_proof_inputs_stay_below_application_bound(k, n, a):
    assert bound_cont(1.0, ksphere_proof_f_bound(k, n, a)).value <= bound_ksphere(k, n, a).value + 1e-15


def test_mix_identity_equals_cont_with_ind_constant():
    k, n = 2, 50
    mix = bound_mix(k, n, n * np.eye(k))
    assert mix.value == pytest.approx(bound_cont(1.0, ind_proof_f_bound(k, n)).value, rel=1e-14)
    assert mix.value == pytest.approx(math.sqrt(2) * 2 / 49)
    assert bound_mix(1, 7, np.array([[7.0]])).value == pytest.approx(math.sqrt(2) / 6)


def test_mix_diagonal_example_family():
    a, n = [2, 5, 10], 10
    report = bound_mix(3, n, gram_matrix(diagonal_example_family(a, n)))
    assert report.value <= math.sqrt(2) * 3 ** 1.5 / (n - 1)
    assert report.inputs["c_op_norm"].provenance == "analytic"


def test_mix_rejects_invalid_gram():
    with pytest.raises(InvalidGramError):
        bound_mix(2, 4, np.array([[4.0, 0.0], [0.0, 3.0]]))
    with pytest.raises(InvalidGramError):
        bound_mix(2, 4, np.array([[4.0, 5.0], [5.0, 4.0]]))
    with pytest.raises(InvalidGramError):
        bound_mix(3, 4, 4 * np.eye(2))


def test_uthm_values_and_notes():
    report = bound_uthm(2, 20)
    assert report.value == pytest.approx(0.3)
    assert any("sqrt(2)" in note for note in report.notes)
    assert bound_uthm(2, 40).value == pytest.approx(report.value / 2)
    with pytest.raises(ParameterError):
        bound_uthm(2, 3)


def test_uthm_proof_constant():
    for n in range(4, 200):
        assert uthm_proof_constant(n) <= 3.0
    assert uthm_proof_constant(10 ** 6) == pytest.approx(math.sqrt(2), rel=1e-4)
    gamma, lam = uthm_proof_norms(2, 20)
    assert bound_complex(gamma, lam).value <= bound_uthm(2, 20).value


# --- Reports ---

def test_report_json_round_trip():
    report = bound_discrete(
        BoundInput(value=1.0, provenance="analytic"),
        1.0,
        2.0,
        0.05,
        BoundInput(value=0.2, provenance="monte-carlo", se=0.003),
        0.01,
    )
    again = BoundReport.from_json(report.to_json())
    assert again == report
    assert again.to_json() == report.to_json()


def test_mix_report_round_trip_keeps_matrix_input():
    report = bound_mix(2, 5, 5 * np.eye(2))
    again = BoundReport.from_json(report.to_json())
    assert again.inputs["gram"].value == [[5.0, 0.0], [0.0, 5.0]]


def test_bounds_are_nonnegative():
    with pytest.raises(ValueError):
        BoundReport(theorem="cont", inputs={}, value=-0.1, formula_text="f_norm/sigma")


# --- From audits ---

def test_bound_from_discrete_audit():
    model = make_iid_sum_pair(iid_law("gaussian", 2), 20)
    audit = audit_pair(model, 4_000, rng=3)
    report = bound_from_audit(audit, m1=1.0, m2=1.0)
    assert report.theorem == "discrete"
    assert report.inputs["e_norm"].provenance == "monte-carlo"
    assert report.se is not None and report.value > 0


def test_bound_from_unitary_audit_uses_realified_route(rng):
    model = make_unitary_projection_pair(random_family(2, 6, rng, complex_valued=True))
    audit = audit_pair(model, 2_000, epsilon=1e-3, rng=5, inner_draws=1)
    report = bound_from_audit(audit)
    assert report.theorem == "cont_complex"
    direct = bound_complex(audit.gamma_norm, audit.lambda_norm).value
    assert report.value <= direct + 1e-12
