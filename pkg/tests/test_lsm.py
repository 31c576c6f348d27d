import numpy as np
import pytest

from oracles import pair_with_overlap, random_ensemble_arrays
from qdetect import linalg
from qdetect.ensemble import build_ensemble, correct_detection_probability, per_state_detection, pure_state
from qdetect.errors import ConditionNotMet
from qdetect.lsm import certificate_from_condition, check_square_root_condition, least_squares_measurement
from qdetect.sdp import solve_optimal, verify_optimality

SEED = 3303
S3 = np.sqrt(3)
REFLECTION = 0.5 * np.array([[1, S3], [S3, -1]])
GEN_PLUS = np.array([1, 1]) / np.sqrt(2)
GEN_MINUS = np.array([1, -1]) / np.sqrt(2)
B1, B2 = 2 / np.sqrt(5), 1 / np.sqrt(5)


def reflection_vectors():
    return [GEN_PLUS, GEN_MINUS, REFLECTION @ GEN_PLUS, REFLECTION @ GEN_MINUS]


def commuting_vectors():
    z = np.array([[0, 1], [1, 0]])
    b = np.diag([1, -1])
    phi = np.array([B1, B2])
    return [u @ v @ phi for u in (np.eye(2), z) for v in (np.eye(2), b)]


@pytest.mark.parametrize("vectors", [reflection_vectors(), commuting_vectors()], ids=["reflection", "commuting"])
def test_lsm_of_two_worked_sets(vectors):
    e = build_ensemble([pure_state(v) for v in vectors], [0.25] * 4, factors=[v[:, None] for v in vectors])
    res = least_squares_measurement(e)
    phi = np.array(vectors).T
    assert np.linalg.norm(phi @ phi.conj().T - 2 * np.eye(2)) < 1e-12
    for v, mu in zip(vectors, res.factors):
        # mu_i = phi_i / sqrt(2); psi_i = phi_i / 2, so T = sqrt(2) I
        np.testing.assert_allclose(mu[:, 0], v / np.sqrt(2), atol=1e-10)
    np.testing.assert_allclose(per_state_detection(e, res.povm), 0.5, atol=1e-12)
    assert correct_detection_probability(e, res.povm) == pytest.approx(0.5, abs=1e-12)


def test_orthonormal_basis_lsm_is_projective():
    n = 4
    e = build_ensemble([pure_state(v) for v in np.eye(n)], [1 / n] * n)
    res = least_squares_measurement(e)
    for mu, v in zip(res.factors, np.eye(n)):
        np.testing.assert_allclose(mu[:, 0], v, atol=1e-12)


def test_lsm_povm_complete_on_random_ensembles():
    rng = np.random.default_rng(SEED)
    for _ in range(100):
        n, m = int(rng.integers(1, 7)), int(rng.integers(1, 9))
        states, priors = random_ensemble_arrays(n, m, rng)
        try:
            e = build_ensemble(states, priors)
        except Exception:
            continue
        res = least_squares_measurement(e)
        assert res.povm.completeness_residual() < 1e-9
        assert all(linalg.is_psd(op) for op in res.povm)


def test_lsm_operators_independent_of_factor_choice():
    rng = np.random.default_rng(SEED + 1)
    for _ in range(30):
        n, m = int(rng.integers(2, 6)), int(rng.integers(2, 6))
        states, priors = random_ensemble_arrays(n, m, rng, rank=int(rng.integers(1, n + 1)))
        try:
            e1 = build_ensemble(states, priors)
        except Exception:
            continue
        rotated = [f @ linalg.random_unitary(f.shape[1], rng) for f in e1.factors]
        e2 = build_ensemble(states, priors, factors=rotated)
        m1 = least_squares_measurement(e1).povm
        m2 = least_squares_measurement(e2).povm
        for a, b in zip(m1, m2):
            assert np.linalg.norm(a - b) < 1e-10


def test_condition_on_symmetric_pure_set():
    e = build_ensemble([pure_state(v) for v in reflection_vectors()], [0.25] * 4)
    res = least_squares_measurement(e)
    rep = check_square_root_condition(e, res)
    assert rep.condition_holds
    # <mu_i, psi_i> = (phi/sqrt 2)^H (phi/2)
    assert rep.alpha == pytest.approx(1 / (2 * np.sqrt(2)), abs=1e-12)
    for p in rep.per_state_matrices:
        assert abs(p[0, 0] - rep.alpha) < 1e-12


def test_condition_fails_for_unequal_priors():
    a, b = pair_with_overlap(0.5)
    e = build_ensemble([pure_state(a), pure_state(b)], [0.9, 0.1])
    rep = check_square_root_condition(e, least_squares_measurement(e))
    assert not rep.condition_holds
    assert rep.max_deviation > 1e-3
    with pytest.raises(ConditionNotMet):
        certificate_from_condition(e, least_squares_measurement(e), rep)


def test_single_state():
    e = build_ensemble([np.array([[1.0]])], [1.0])
    res = least_squares_measurement(e)
    rep = check_square_root_condition(e, res)
    assert rep.condition_holds and rep.alpha == pytest.approx(1.0)
    x = certificate_from_condition(e, res, rep)
    np.testing.assert_allclose(x, [[1.0]])
    np.testing.assert_allclose(res.povm[0], [[1.0]])


def test_certificate_for_symmetric_set():
    e = build_ensemble([pure_state(v) for v in reflection_vectors()], [0.25] * 4)
    res = least_squares_measurement(e)
    rep = check_square_root_condition(e, res)
    x = certificate_from_condition(e, res, rep)
    # alpha = 1/(2 sqrt 2) and W = I/2, so X = alpha / sqrt(2) I = I/4
    np.testing.assert_allclose(x, np.eye(2) / 4, atol=1e-12)
    v = verify_optimality(e, res.povm, x, tol=1e-10, psd_tol=1e-10)
    assert v.optimal
    assert v.trace_x == pytest.approx(v.p_correct, abs=1e-12)


def test_certificate_for_orthonormal_basis():
    n = 3
    e = build_ensemble([pure_state(v) for v in np.eye(n)], [1 / n] * n)
    res = least_squares_measurement(e)
    rep = check_square_root_condition(e, res)
    assert rep.alpha == pytest.approx(1 / np.sqrt(n))
    x = certificate_from_condition(e, res, rep)
    np.testing.assert_allclose(x, np.eye(n) / n, atol=1e-12)
    assert verify_optimality(e, res.povm, x).optimal


def test_mixed_states_meeting_condition_are_optimal():
    # pure symmetric orbit tensored with a maximally mixed qubit: rank-2, non-orthogonal
    rng = np.random.default_rng(SEED + 2)
    for _ in range(10):
        u = linalg.random_unitary(3, rng)
        gen = np.diag(np.exp(2j * np.pi * np.arange(3) / 3))
        a = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        a /= np.linalg.norm(a)
        orbit = [u @ np.linalg.matrix_power(gen, k) @ u.conj().T @ a for k in range(3)]
        states = [np.kron(pure_state(v), np.eye(2) / 2) for v in orbit]
        e = build_ensemble(states, [1 / 3] * 3)
        res = least_squares_measurement(e)
        rep = check_square_root_condition(e, res)
        assert rep.condition_holds
        assert abs(correct_detection_probability(e, res.povm) - solve_optimal(e).p_correct) < 1e-6
