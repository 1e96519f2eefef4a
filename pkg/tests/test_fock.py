import numpy as np
import pytest
from scipy.linalg import expm

from conftest import identity_model, non_commuting_model, two_mode_transfer
from fcs import counting, fock
from fcs.errors import DimensionTooLarge, NonIntegerSpectrum
from fcs.model import QuantumModel, fermi_sea, haar_unitary, random_hermitian, random_model


def test_basis():
    b = fock.FockBasis(3)
    assert b.size == 8
    np.testing.assert_array_equal(b.particle_numbers(), [0, 1, 1, 2, 1, 2, 2, 3])
    assert b.occupations()[5].tolist() == [True, False, True]


def test_dimension_limit():
    with pytest.raises(DimensionTooLarge):
        fock.gamma(np.eye(fock.MAX_MODES + 1))


def test_gamma_identity():
    np.testing.assert_allclose(fock.gamma(np.eye(4)), np.eye(16))


def test_trace_gamma_is_det(rng):
    M = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    assert abs(np.trace(fock.gamma(M)) - np.linalg.det(np.eye(4) + M)) <= 1e-10


def test_gamma_is_multiplicative(rng):
    A = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    B = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    np.testing.assert_allclose(fock.gamma(A @ B), fock.gamma(A) @ fock.gamma(B), atol=1e-10)


def test_gamma_unitary(rng):
    G = fock.gamma(haar_unitary(5, rng))
    assert np.max(np.abs(G.conj().T @ G - np.eye(32))) <= 1e-10


def test_dgamma_zero_and_counting():
    assert not np.any(fock.dgamma(np.zeros((3, 3))))
    Q = np.diag([1.0, 0.0, 1.0])
    N = fock.dgamma(Q)
    states = np.arange(8)
    expected = (states & 1) + ((states >> 2) & 1)
    np.testing.assert_array_equal(np.diag(N).real, expected)
    assert np.count_nonzero(N - np.diag(np.diag(N))) == 0


def test_exp_dgamma_is_gamma_exp(rng):
    A = random_hermitian(4, rng)
    lhs = expm(0.6j * fock.dgamma(A))
    rhs = fock.gamma(expm(0.6j * A))
    assert np.max(np.abs(lhs - rhs)) <= 1e-10


def test_dgamma_matches_creation_operators(rng):
    # independent construction from the annihilators
    A = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    c = [fock.annihilator(3, j) for j in range(3)]
    ref = sum(A[i, j] * c[i].conj().T @ c[j] for i in range(3) for j in range(3))
    np.testing.assert_allclose(fock.dgamma(A), ref, atol=1e-14)


def test_canonical_anticommutation():
    c = [fock.annihilator(3, j) for j in range(3)]
    for i in range(3):
        for j in range(3):
            anti = c[i] @ c[j].conj().T + c[j].conj().T @ c[i]
            np.testing.assert_allclose(anti, np.eye(8) * (i == j), atol=0)
            np.testing.assert_allclose(c[i] @ c[j] + c[j] @ c[i], 0, atol=0)


def test_many_body_state_examples():
    vac = fock.many_body_state(np.zeros((2, 2)))
    assert vac[0, 0] == 1 and np.count_nonzero(vac) == 1
    np.testing.assert_allclose(fock.many_body_state(np.array([[0.3]])), np.diag([0.7, 0.3]))


def test_many_body_state_slater(rng):
    P = fermi_sea(random_hermitian(4, rng))
    W = fock.many_body_state(P)
    np.testing.assert_allclose(W @ W, W, atol=1e-12)
    assert np.trace(W) == pytest.approx(1)


def test_many_body_state_reproduces_rho(rng):
    m = random_model(5, 4, "mixed-general")
    W = fock.many_body_state(m.rho)
    c = [fock.annihilator(4, j) for j in range(4)]
    # <c_j^+ c_i> = rho_ij
    one_body = np.array([[np.trace(W @ c[j].conj().T @ c[i]) for j in range(4)] for i in range(4)])
    np.testing.assert_allclose(one_body, m.rho, atol=1e-12)


def test_chi_oracle_examples(rng):
    m = identity_model(4, rng)
    np.testing.assert_allclose(fock.chi_oracle(m, np.linspace(0, 6, 7)), 1, atol=1e-12)
    t2 = 0.3
    lam = np.linspace(0, 2 * np.pi, 9)
    np.testing.assert_allclose(fock.chi_oracle(two_mode_transfer(t2), lam),
                               1 - t2 + t2 * np.exp(1j * lam), atol=1e-12)


def test_chi_oracle_matches_les_lev():
    m = random_model(11, 6, "mixed-commuting")
    for lam in (0.4, 2.5):
        assert abs(fock.chi_oracle(m, lam) - counting.chi_les_lev(m, lam)) <= 1e-10


def test_distribution_oracle():
    d = fock.distribution_oracle(two_mode_transfer(0.3))
    assert d[0] == pytest.approx(0.7) and d[1] == pytest.approx(0.3)
    m = random_model(2, 5, "mixed-commuting")
    d = fock.distribution_oracle(m)
    assert d.total() == pytest.approx(1, abs=1e-12)
    lam = np.linspace(0, 2 * np.pi, 13)
    via_p = np.array([np.sum(d.p * np.exp(1j * l * d.n)) for l in lam])
    np.testing.assert_allclose(via_p, fock.chi_oracle(m, lam), atol=1e-10)


def test_non_integer_charge():
    m = QuantumModel(np.eye(2), np.diag([0.5, 0.5]), np.diag([0.5, 0.0]))
    with pytest.raises(NonIntegerSpectrum):
        fock.chi_oracle(m, 0.3)


def test_alternative_oracles_agree_on_commuting_state():
    m = random_model(3, 5, "mixed-commuting")
    lam = 1.1
    ref = fock.chi_oracle(m, lam)
    assert abs(fock.chi_oracle_no_collapse(m, lam) - ref) <= 1e-12
    assert abs(fock.chi_oracle_spin(m, lam) - ref) <= 1e-12


def test_collapse_matters_for_non_commuting(rng):
    m = non_commuting_model(4, rng)
    assert abs(fock.chi_oracle_no_collapse(m, 1.0) - fock.chi_oracle(m, 1.0)) > 1e-6
