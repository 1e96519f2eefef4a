"""Dense complex linear algebra used by all determinant formulas.

Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128``.
Every public function validates its input (square, finite) and never
modifies it.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg

from .errors import InvalidMatrix, NotHermitian, SingularMatrix

HERMITIAN_TOL = 1e-10


def as_matrix(M, name: str = "matrix") -> np.ndarray:
    """Return `M` as a finite square complex array (a copy)."""
    A = np.array(M, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise InvalidMatrix(f"{name} must be a non-empty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidMatrix(f"{name} has NaN or Inf entries")
    return A


def dagger(M: np.ndarray) -> np.ndarray:
    return M.conj().T


def hermiticity_defect(M) -> float:
    A = as_matrix(M)
    return float(np.max(np.abs(A - dagger(A))))


def symmetrize(M, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Return ``(M + M^H)/2`` after checking that `M` is Hermitian within `tol`."""
    A = as_matrix(M)
    dev = float(np.max(np.abs(A - dagger(A))))
    if dev > tol:
        raise NotHermitian(dev, tol)
    return 0.5 * (A + dagger(A))


def hermitian_eig(M, tol: float = HERMITIAN_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix.

    Parameters
    ----------
    M : array_like
        Hermitian matrix; the max-entry deviation from Hermiticity must not
        exceed `tol`.

    Returns
    -------
    eigenvalues : ndarray
        Real eigenvalues in ascending order (ties keep LAPACK order).
    V : ndarray
        Unitary matrix whose columns are the eigenvectors, so that
        ``M = V @ diag(eigenvalues) @ V^H``.
    """
    H = symmetrize(M, tol)
    w, V = np.linalg.eigh(H)
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


def matrix_function(H, f: Callable[[np.ndarray], np.ndarray], tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Apply the scalar map `f` to a Hermitian matrix through its spectrum.

    `f` is called once on the real eigenvalue vector and may return complex
    values, e.g. ``lambda x: np.exp(1j * lam * x)``.
    """
    w, V = hermitian_eig(H, tol)
    fw = np.asarray(f(w), dtype=complex)
    return (V * fw) @ dagger(V)


def expi(H, lam: complex, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """``exp(i * lam * H)`` for Hermitian `H`; `lam` may be complex."""
    return matrix_function(H, lambda x: np.exp(1j * lam * x), tol)


@dataclass(frozen=True)
class LogDet:
    """Determinant stored as ``exp(log_modulus + 1j * phase)``."""

    log_modulus: float
    phase: float
    principal: bool = True

    @property
    def value(self) -> complex:
        return complex(np.exp(self.log_modulus + 1j * self.phase))

    def __add__(self, other: "LogDet") -> "LogDet":
        return LogDet(self.log_modulus + other.log_modulus,
                      _principal(self.phase + other.phase))


def _principal(phase: float) -> float:
    """Map an angle to (-pi, pi]."""
    p = float(np.angle(np.exp(1j * phase)))
    return np.pi if p == -np.pi else p


def log_det(M) -> LogDet:
    """Log-modulus and principal phase of ``det M`` from a pivoted LU.

    Raises
    ------
    SingularMatrix
        If a pivot is exactly zero (the log-modulus would be ``-inf``).
    """
    A = as_matrix(M)
    with warnings.catch_warnings():
        # an exactly singular factor is reported below as SingularMatrix
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(A, check_finite=False)
    diag = np.diag(lu)
    mod = np.abs(diag)
    if np.any(mod == 0.0):
        raise SingularMatrix(f"zero pivot at position {int(np.argmin(mod))}")
    n_swaps = int(np.count_nonzero(piv != np.arange(len(piv))))
    log_modulus = float(np.sum(np.log(mod)))
    phase = float(np.sum(np.angle(diag))) + np.pi * (n_swaps % 2)
    return LogDet(log_modulus, _principal(phase))


def det(M) -> complex:
    """Determinant via :func:`log_det`; returns ``0`` for a singular matrix."""
    try:
        return log_det(M).value
    except SingularMatrix:
        return 0j


def trace_norm(M) -> float:
    """Sum of singular values (the finite-dimensional trace norm)."""
    A = as_matrix(M)
    return float(np.sum(np.linalg.svd(A, compute_uv=False)))


def op_norm(M) -> float:
    A = as_matrix(M)
    return float(np.linalg.norm(A, 2))


def commutator(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return A @ B - B @ A
