from fractions import Fraction

import numpy as np
import pytest

from src.errors import NotImplementedDegreeError, ParameterError, QueryParseError
from src.haar.moments import (
    MomentQuery,
    expected_trace_quartic,
    orthogonal_moment_oracle,
    parse_moment_query,
    q_covariance,
    twisted_covariance,
    unitary_moment_oracle,
)
from src.haar.montecarlo import default_moment_battery, mc_moment_estimate, run_moment_checks
from src.haar.rotation import (
    RotationPerturbation,
    conjugated_rotation_pair,
    frame_increment,
    increment_expansion,
    rotation_delta,
)
from src.haar.sampling import (
    sample_frame,
    sample_orthogonal,
    sample_orthogonal_batch,
    sample_unitary,
    sample_unitary_batch,
)
from tests.helpers import mean_se, within_se


# --- Sampling ---

def test_orthogonal_sample_is_orthogonal(rng):
    m = sample_orthogonal(7, rng)
    assert np.allclose(m @ m.T, np.eye(7), atol=1e-12)


def test_unitary_sample_is_unitary(rng):
    m = sample_unitary(7, rng)
    assert np.allclose(m @ m.conj().T, np.eye(7), atol=1e-12)


def test_orthogonal_one_is_a_fair_sign(rng):
    draws = sample_orthogonal_batch(1, 100_000, rng)[:, 0, 0]
    assert set(np.round(draws, 12)) <= {-1.0, 1.0}
    est, se = mean_se(draws > 0)
    assert within_se(est, 0.5, se)


def test_orthogonal_second_moment(rng):
    est, se = mc_moment_estimate(parse_moment_query("O:u(1,1)u(1,1)@n=6"), 200_000, rng)
    assert within_se(est, 1 / 6, se)


def test_unitary_moments(rng):
    est, se = mc_moment_estimate(parse_moment_query("U:h(1,1)h*(1,1)@n=6"), 200_000, rng)
    assert within_se(est, 1 / 6, se)
    est, se = mc_moment_estimate(MomentQuery(group="unitary", factors=((1, 1, False),), dimension=6), 50_000, rng)
    assert within_se(est, 0.0, se)


def test_left_invariance(rng):
    n = 5
    v = sample_orthogonal(n, rng)
    batch = sample_orthogonal_batch(n, 50_000, rng)
    rotated = np.einsum("ab,sbc->sac", v, batch)
    for i, j in [(0, 0), (1, 3)]:
        est_m, se_m = mean_se(batch[:, i, j] ** 2)
        est_v, se_v = mean_se(rotated[:, i, j] ** 2)
        assert within_se(est_m, est_v, np.hypot(se_m, se_v))


def test_frames_are_orthonormal(rng):
    k = sample_frame(6, 100, rng, complex_entries=True)
    gram = np.einsum("sna,snb->sab", k.conj(), k)
    assert np.allclose(gram, np.eye(2), atol=1e-12)
    with pytest.raises(ParameterError):
        sample_frame(1, 10, rng)


def test_mc_estimate_needs_samples(rng):
    with pytest.raises(ParameterError):
        mc_moment_estimate(parse_moment_query("O:u(1,1)u(1,1)@n=3"), 50, rng)


# --- Rotation ---

def test_rotation_perturbation():
    rot = RotationPerturbation.build(0.3, 5)
    assert np.allclose(rot.a_eps @ rot.a_eps.T, np.eye(5), atol=1e-14)
    assert rot.a_eps[0, 1] == pytest.approx(0.3)
    assert abs(rot.delta) <= 0.3 ** 4
    assert rotation_delta(1e-3) == pytest.approx(-(1e-3) ** 4 / 8, rel=1e-3)


@pytest.mark.parametrize("epsilon", [0.0, -0.1, 0.6])
def test_rotation_pair_rejects_epsilon(rng, epsilon):
    with pytest.raises(ParameterError):
        conjugated_rotation_pair(np.eye(3), epsilon, rng)


def test_rotation_pair_rejects_non_group_element(rng):
    with pytest.raises(ParameterError):
        conjugated_rotation_pair(2 * np.eye(3), 0.1, rng)


@pytest.mark.parametrize("complex_group", [False, True])
def test_rotation_pair_expansion(rng, complex_group):
    n, eps = 6, 0.2
    m = sample_unitary(n, rng) if complex_group else sample_orthogonal(n, rng)
    m_eps, witness = conjugated_rotation_pair(m, eps, rng)
    assert np.allclose(m_eps @ m_eps.conj().T, np.eye(n), atol=1e-10)
    assert np.allclose(m_eps - m, increment_expansion(m, witness, eps), atol=1e-12)
    assert np.allclose(witness.q, -witness.q.conj().T, atol=1e-14)
    rot = RotationPerturbation.build(eps, n)
    assert np.allclose(m_eps, witness.u @ rot.a_eps @ witness.u.conj().T @ m, atol=1e-12)


def test_rotation_pair_small_epsilon(rng):
    m = sample_orthogonal(5, rng)
    m_eps, witness = conjugated_rotation_pair(m, 1e-4, rng)
    kk = witness.k_cols @ witness.k_cols.T
    bound = 1e-4 * (np.linalg.norm(kk @ m) + np.linalg.norm(witness.q @ m))
    assert np.linalg.norm(m_eps - m) <= bound


def test_rotation_pair_linearity(rng):
    n, eps = 10, 1e-3
    a = rng.standard_normal((n, n))
    m = sample_orthogonal(n, rng)
    values = []
    for _ in range(4000):
        m_eps, witness = conjugated_rotation_pair(m, eps, rng)
        # antithetic partner shares U, cancelling the O(eps) term
        m_minus = m + increment_expansion(m, witness, -eps)
        values.append(n / eps ** 2 * 0.5 * (np.trace(a @ (m_eps - m)) + np.trace(a @ (m_minus - m))))
    est, se = mean_se(values)
    assert within_se(est, -np.trace(a @ m), se)


def test_frame_increment_matches_direct(rng):
    n, eps = 4, 0.1
    m = sample_orthogonal(n, rng)
    a = rng.standard_normal((n, n))
    m_eps, witness = conjugated_rotation_pair(m, eps, rng)
    k = witness.k_cols[np.newaxis]
    inc = frame_increment(np.einsum("ba,sbc->sac", m, k), np.einsum("ab,sbc->sac", a, k), eps)
    assert inc[0] == pytest.approx(np.trace(a @ (m_eps - m)), abs=1e-12)


def test_rotation_pair_exchangeable(rng):
    n, eps = 4, 0.3
    a = rng.standard_normal((n, n))
    batch = sample_orthogonal_batch(n, 5000, rng)
    x, x_eps = [], []
    for m in batch:
        m_eps, _ = conjugated_rotation_pair(m, eps, rng)
        x.append(np.trace(a @ m))
        x_eps.append(np.trace(a @ m_eps))
    x, x_eps = np.array(x), np.array(x_eps)
    for stat in (x * x_eps ** 2 - x_eps * x ** 2, x ** 2 - x_eps ** 2):
        est, se = mean_se(stat)
        assert within_se(est, 0.0, se)


# --- Oracles ---

@pytest.mark.parametrize(
    "text,expected",
    [
        ("O:u(1,1)u(1,2)@n=5", Fraction(0)),
        ("O:u(1,1)u(1,1)u(1,1)u(1,1)@n=5", Fraction(3, 35)),
        ("O:u(1,1)u(1,1)u(2,2)u(2,2)@n=5", Fraction(6, 140)),
        ("O:q(1,2)q(1,2)@n=5", Fraction(2, 20)),
        ("O:u(2,3)u(2,3)@n=7", Fraction(1, 7)),
    ],
)
def test_orthogonal_oracle(text, expected):
    assert orthogonal_moment_oracle(parse_moment_query(text)) == expected


@pytest.mark.parametrize(
    "text,expected",
    [
        ("U:h(1,1)h*(1,2)@n=6", Fraction(0)),
        ("U:h(1,1)h(2,2)h*(1,1)h*(2,2)@n=6", Fraction(1, 35)),
        ("U:t(1,2)t(2,1)@n=6", Fraction(-2, 35)),
        ("U:h(1,1)h(1,1)h*(1,1)h*(1,1)@n=6", Fraction(2, 42)),
        ("U:h(1,1)h(1,1)h*(1,1)@n=6", Fraction(0)),
    ],
)
def test_unitary_oracle(text, expected):
    assert unitary_moment_oracle(parse_moment_query(text)) == expected


def test_q_covariance_matches_oracle():
    n = 4
    for i, j, l, p in [(1, 2, 1, 2), (1, 2, 2, 1), (1, 3, 1, 2), (2, 3, 2, 3), (1, 1, 1, 1)]:
        poly = parse_moment_query(f"O:q({i},{j})q({l},{p})@n={n}")
        assert orthogonal_moment_oracle(poly) == q_covariance(i, j, l, p, n)


def test_twisted_covariance_matches_oracle():
    n = 5
    for i, j, r, s in [(1, 2, 2, 1), (1, 1, 2, 2), (1, 1, 1, 1), (1, 2, 1, 2), (2, 3, 3, 2)]:
        poly = parse_moment_query(f"U:t({i},{j})t({r},{s})@n={n}")
        assert unitary_moment_oracle(poly) == twisted_covariance(i, j, r, s, n)


def test_unsupported_degree():
    with pytest.raises(NotImplementedDegreeError):
        orthogonal_moment_oracle(parse_moment_query("O:u(1,1)u(1,1)u(1,1)u(1,1)u(1,1)u(1,1)@n=4"))


@pytest.mark.parametrize(
    "text",
    ["O:h*(1,1)h(1,1)@n=3", "O:u(1,4)u(1,1)@n=3", "X:u(1,1)@n=3", "O:u(1,1)v(1,1)@n=3", "U:h(1,1)"],
)
def test_parse_errors(text):
    with pytest.raises(QueryParseError):
        parse_moment_query(text)


def test_parse_canonical_text():
    poly = parse_moment_query(" U : h(1, 1) h*(1,2) @ n=6")
    assert str(poly) == "U:h(1,1)h*(1,2)@n=6"
    assert len(parse_moment_query("O:q(1,2)q(3,4)@n=5").terms) == 4


def test_trace_contractions_single_entry():
    n = 5
    a = np.zeros((n, n))
    a[0, 0] = np.sqrt(n)
    assert expected_trace_quartic("orthogonal", [a, a], "tr(AMBM)") == pytest.approx(1.0)
    assert expected_trace_quartic("orthogonal", [a, a], "tr(AMBM)^2") == pytest.approx(3 * n / (n + 2))
    assert expected_trace_quartic("unitary", [a, a], "tr(AM)conj(tr(BM))") == pytest.approx(1.0)
    assert expected_trace_quartic("unitary", [a, a], "|tr(AM)tr(BM)|^2") == pytest.approx(2 * n / (n + 1))


def test_trace_contraction_matches_monte_carlo(rng):
    n = 4
    a = rng.standard_normal((n, n))
    b = rng.standard_normal((n, n))
    exact = expected_trace_quartic("unitary", [a, b], "|tr(AMBM)|^2").real
    batch = sample_unitary_batch(n, 100_000, rng)
    t = np.einsum("ab,sbc,cd,sda->s", a, batch, b, batch)
    est, se = mean_se(np.abs(t) ** 2)
    assert within_se(est, exact, se)


# --- Battery ---

def test_battery_shape():
    battery = default_moment_battery()
    assert len(battery) == 30
    assert {p.dimension for p in battery} == {4, 6, 9}


def test_moment_checks_reproducible():
    queries = ["O:u(1,1)u(1,1)@n=4", "U:h(1,1)h*(1,1)@n=4"]
    first = run_moment_checks(queries, samples=2000, seed=7, threads=2)
    second = run_moment_checks(queries, samples=2000, seed=7, threads=2)
    assert [r.estimate for r in first] == [r.estimate for r in second]
    assert first[0].exact == pytest.approx(0.25)


@pytest.mark.slow
def test_battery_agrees_with_oracles():
    records = run_moment_checks(default_moment_battery(), samples=200_000, seed=20240101, threads=4)
    assert all(r.within_tolerance for r in records)
