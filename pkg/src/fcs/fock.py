"""Brute-force second quantization on the fermionic Fock space.

The Fock space over ``C^d`` has the ``2^d`` occupation bitmasks as basis,
ordered by integer value; bit ``i`` set means mode ``i`` is occupied.  The
basis vector of an occupied set ``i_1 < ... < i_k`` is
``c_{i_1}^+ ... c_{i_k}^+ |0>``, i.e. creation operators act with the sign
``(-1)^(number of occupied modes below the target)``.  With this convention
``<T| Gamma(M) |S> = det M[T, S]`` (rows ``T``, columns ``S``).

Everything here is dense and exponential in ``d``.  It exists to check the
determinant formulas in :mod:`fcs.counting`, not to be fast.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .counting import CountingDistribution
from .errors import DimensionTooLarge, NonIntegerSpectrum
from .linalg import as_matrix, dagger, hermitian_eig
from .model import QuantumModel, clamp_occupations

MAX_MODES = 14
MAX_ORACLE_MODES = 12
SKIP_PROBABILITY = 1e-14
INTEGER_TOL = 1e-8

# Fock operators are dense (2^d, 2^d) complex arrays.
FockOperator = np.ndarray


@dataclass(frozen=True)
class FockBasis:
    dim: int

    def __post_init__(self):
        _check_dim(self.dim, MAX_MODES)

    @property
    def size(self) -> int:
        return 1 << self.dim

    @property
    def states(self) -> np.ndarray:
        return np.arange(self.size, dtype=np.int64)

    def occupations(self) -> np.ndarray:
        """Boolean array ``(2^d, d)``; entry ``[s, i]`` is True if mode ``i`` is occupied in ``s``."""
        return (self.states[:, None] >> np.arange(self.dim)) & 1 == 1

    def particle_numbers(self) -> np.ndarray:
        return np.bitwise_count(self.states).astype(int)


def _check_dim(d: int, limit: int) -> None:
    if d > limit:
        raise DimensionTooLarge(f"Fock space over {d} modes exceeds the limit of {limit}")


@lru_cache(maxsize=None)
def _sectors(d: int) -> tuple[tuple[np.ndarray, np.ndarray], ...]:
    """For each particle number k: (bitmasks ascending, occupied modes ascending)."""
    masks = np.arange(1 << d, dtype=np.int64)
    counts = np.bitwise_count(masks)
    out = []
    for k in range(d + 1):
        mk = masks[counts == k]
        bits = (mk[:, None] >> np.arange(d)) & 1
        modes = np.nonzero(bits)[1].reshape(len(mk), k)
        out.append((mk, modes))
    return tuple(out)


def gamma(M, chunk: int = 256) -> FockOperator:
    """Multiplicative second quantization ``Gamma(M)``; `M` need not be unitary."""
    M = as_matrix(M, "M")
    d = M.shape[0]
    _check_dim(d, MAX_MODES)
    G = np.zeros((1 << d, 1 << d), dtype=complex)
    G[0, 0] = 1.0
    for k, (masks, modes) in enumerate(_sectors(d)):
        if k == 0:
            continue
        cols = modes[None, :, None, :]
        for start in range(0, len(masks), chunk):
            rows = modes[start:start + chunk, None, :, None]
            minors = np.linalg.det(M[rows, cols])
            G[np.ix_(masks[start:start + chunk], masks)] = minors
    return G


def _below_parity(states: np.ndarray, mode: int) -> np.ndarray:
    below = states & ((1 << mode) - 1)
    return np.where(np.bitwise_count(below) % 2 == 1, -1.0, 1.0)


def dgamma(A) -> FockOperator:
    """Additive second quantization ``dGamma(A) = sum_ij A_ij c_i^+ c_j``."""
    A = as_matrix(A, "A")
    d = A.shape[0]
    _check_dim(d, MAX_MODES)
    states = np.arange(1 << d, dtype=np.int64)
    out = np.zeros((1 << d, 1 << d), dtype=complex)
    for j in range(d):
        has_j = states[(states >> j) & 1 == 1]
        removed = has_j ^ (1 << j)
        sign_j = _below_parity(has_j, j)
        for i in range(d):
            if A[i, j] == 0:
                continue
            ok = (removed >> i) & 1 == 0
            src, mid = has_j[ok], removed[ok]
            sign = sign_j[ok] * _below_parity(mid, i)
            out[mid | (1 << i), src] += A[i, j] * sign
    return out


def annihilator(d: int, j: int) -> FockOperator:
    """Matrix of ``c_j`` in the bitmask basis (used for anticommutator checks)."""
    _check_dim(d, MAX_MODES)
    states = np.arange(1 << d, dtype=np.int64)
    src = states[(states >> j) & 1 == 1]
    out = np.zeros((1 << d, 1 << d), dtype=complex)
    out[src ^ (1 << j), src] = _below_parity(src, j)
    return out


def many_body_state(rho) -> FockOperator:
    """Quasi-free density matrix with one-particle density matrix `rho`.

    Built as a product of two-level states ``(1 - nu_i, nu_i)`` in the
    eigenbasis of `rho` and rotated back with ``Gamma(V)``, so occupations
    0 and 1 are allowed.
    """
    rho = as_matrix(rho, "rho")
    _check_dim(rho.shape[0], MAX_MODES)
    nu, V = hermitian_eig(clamp_occupations(rho))
    occ = FockBasis(rho.shape[0]).occupations()
    weights = np.prod(np.where(occ, nu, 1.0 - nu), axis=1)
    GV = gamma(V)
    return (GV * weights) @ dagger(GV)


def fock_exp(N: FockOperator, lam: complex) -> FockOperator:
    """``exp(i lam N)`` for Hermitian Fock operator `N`."""
    if np.allclose(N, np.diag(np.diag(N)), atol=0.0):
        return np.diag(np.exp(1j * lam * np.diag(N).real))
    w, V = hermitian_eig(N)
    return (V * np.exp(1j * lam * w)) @ dagger(V)


def charge_projections(Q) -> tuple[np.ndarray, list[np.ndarray]]:
    """Integer eigenvalues of ``dGamma(Q)`` and the matching spectral projections."""
    N = dgamma(Q)
    if np.allclose(N, np.diag(np.diag(N)), atol=0.0):
        w = np.diag(N).real
        V = np.eye(len(w), dtype=complex)
    else:
        w, V = hermitian_eig(N)
    rounded = np.rint(w)
    dev = float(np.max(np.abs(w - rounded)))
    if dev > INTEGER_TOL:
        raise NonIntegerSpectrum(f"dGamma(Q) has non-integer eigenvalues (deviation {dev:.2e})")
    charges = np.unique(rounded).astype(int)
    projs = []
    for a in charges:
        cols = V[:, rounded == a]
        projs.append(cols @ dagger(cols))
    return charges, projs


def history_probabilities(model: QuantumModel) -> tuple[np.ndarray, np.ndarray]:
    """Joint probabilities of the outcomes of the two charge measurements.

    Returns
    -------
    charges : ndarray of int
        Eigenvalues ``alpha`` of ``dGamma(Q)``.
    prob : ndarray
        ``prob[i, j] = Tr(G(U)^H P_j G(U) P_i state P_i)``: first outcome
        ``charges[i]``, second outcome ``charges[j]``.
    """
    _check_dim(model.dim, MAX_ORACLE_MODES)
    charges, projs = charge_projections(model.Q)
    state = many_body_state(model.rho)
    GU = gamma(model.U)
    prob = np.zeros((len(charges), len(charges)))
    for i, Pi in enumerate(projs):
        if np.trace(state @ Pi).real < SKIP_PROBABILITY:
            continue
        evolved = GU @ (Pi @ state @ Pi) @ dagger(GU)
        for j, Pj in enumerate(projs):
            prob[i, j] = np.trace(Pj @ evolved).real
    return charges, prob


def chi_oracle(model: QuantumModel, lam):
    """Generating function of the two-measurement protocol, evaluated on Fock space.

    The first measurement collapses the state (``P_i state P_i``), so for
    ``[Q, rho] != 0`` this is the generating function with collapse.
    `lam` may be a scalar or an array.
    """
    charges, prob = history_probabilities(model)
    lam_arr = np.asarray(lam, dtype=float)
    transfer = charges[None, :] - charges[:, None]
    phases = np.exp(1j * np.multiply.outer(lam_arr, transfer))
    return np.sum(phases * prob, axis=(-2, -1))


def distribution_oracle(model: QuantumModel) -> CountingDistribution:
    """Transfer distribution ``p_n`` summed over histories with ``alpha_j - alpha_i = n``."""
    charges, prob = history_probabilities(model)
    span = int(charges.max() - charges.min())
    p = np.zeros(2 * span + 1)
    for i, a in enumerate(charges):
        for j, b in enumerate(charges):
            p[b - a + span] += prob[i, j]
    return CountingDistribution(-span, p).trimmed()


def _fock_ingredients(model: QuantumModel):
    _check_dim(model.dim, MAX_ORACLE_MODES)
    N = dgamma(model.Q)
    return N, gamma(model.U), many_body_state(model.rho)


def chi_oracle_no_collapse(model: QuantumModel, lam: float) -> complex:
    """``Tr(G(U)^H e^{i lam N} G(U) e^{-i lam N} state)``; equals :func:`chi_oracle` when ``[Q, rho] = 0``."""
    N, GU, state = _fock_ingredients(model)
    X = dagger(GU) @ fock_exp(N, lam) @ GU @ fock_exp(N, -lam)
    return complex(np.trace(X @ state))


def chi_oracle_single_measurement(model: QuantumModel, lam: float) -> complex:
    """``Tr(exp(i lam (G(U)^H N G(U) - N)) state)``: one measurement of the charge difference."""
    N, GU, state = _fock_ingredients(model)
    return complex(np.trace(fock_exp(dagger(GU) @ N @ GU - N, lam) @ state))


def chi_oracle_spin(model: QuantumModel, lam: float) -> complex:
    """Spin-detector generating function ``Tr(e^{-i lam N/2} G(U)^H e^{i lam N} G(U) e^{-i lam N/2} state)``."""
    N, GU, state = _fock_ingredients(model)
    half = fock_exp(N, -lam / 2)
    X = half @ dagger(GU) @ fock_exp(N, lam) @ GU @ half
    return complex(np.trace(X @ state))
