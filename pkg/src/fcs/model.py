"""Single-particle transport models: evolution ``U``, state ``rho``, charge ``Q``.

A model lives on one finite-dimensional Hilbert space.  ``rho`` is a
one-particle density matrix (``0 <= rho <= 1``) describing a quasi-free
many-fermion state, ``Q`` the charge in the distinguished lead and ``U``
the single-particle evolution between the two charge measurements.

Units: charge ``e = 1`` and ``hbar = 1``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.special import expit

from .errors import DegenerateFermiLevel, InvalidMatrix, SpectrumOutOfRange
from .linalg import (
    HERMITIAN_TOL,
    as_matrix,
    commutator,
    dagger,
    hermitian_eig,
    matrix_function,
)

UNITARY_TOL = 1e-10
PROJECTION_TOL = 1e-10
COMMUTING_TOL = 1e-10
OCCUPATION_WINDOW = 1e-12
FERMI_LEVEL_GAP = 1e-9

ModelKind = Literal["pure-commuting", "mixed-commuting", "mixed-general"]


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def clamp_occupations(rho) -> np.ndarray:
    """Clamp the spectrum of `rho` to [0, 1]; rejects eigenvalues outside the window."""
    w, V = hermitian_eig(rho)
    if w[0] < -OCCUPATION_WINDOW or w[-1] > 1 + OCCUPATION_WINDOW:
        raise SpectrumOutOfRange(
            f"occupations must lie in [0, 1], got range [{w[0]:.3e}, {w[-1]:.3e}]"
        )
    w = np.clip(w, 0.0, 1.0)
    return (V * w) @ dagger(V)


@dataclass(frozen=True)
class QuantumModel:
    """The triple ``(U, rho, Q)`` with derived operators.

    Flags ``commuting``, ``pure`` and ``projection`` are detected from the
    matrices when left as ``None``.  Constructing a model does not check
    unitarity or the occupation bounds; use :func:`validate` for that.
    """

    U: np.ndarray
    rho: np.ndarray
    Q: np.ndarray
    commuting: bool | None = None
    pure: bool | None = None
    projection: bool | None = None
    label: str = field(default="", compare=False)

    def __post_init__(self):
        U = as_matrix(self.U, "U")
        rho = as_matrix(self.rho, "rho")
        Q = as_matrix(self.Q, "Q")
        if not (U.shape == rho.shape == Q.shape):
            raise InvalidMatrix(
                f"U, rho, Q must share one shape, got {U.shape}, {rho.shape}, {Q.shape}"
            )
        object.__setattr__(self, "U", _readonly(U))
        object.__setattr__(self, "rho", _readonly(rho))
        object.__setattr__(self, "Q", _readonly(Q))
        if self.commuting is None:
            object.__setattr__(self, "commuting", commutator_norm(Q, rho) <= COMMUTING_TOL)
        if self.pure is None:
            object.__setattr__(self, "pure", float(np.max(np.abs(rho @ rho - rho))) <= PROJECTION_TOL)
        if self.projection is None:
            object.__setattr__(self, "projection", float(np.max(np.abs(Q @ Q - Q))) <= PROJECTION_TOL)

    @property
    def dim(self) -> int:
        return self.U.shape[0]

    @property
    def rho_prime(self) -> np.ndarray:
        return np.eye(self.dim) - self.rho

    @property
    def rho_U(self) -> np.ndarray:
        return dagger(self.U) @ self.rho @ self.U

    @property
    def Q_U(self) -> np.ndarray:
        return dagger(self.U) @ self.Q @ self.U

    @property
    def delta_Q(self) -> np.ndarray:
        """Transmitted-charge operator ``U^H Q U - Q``."""
        return self.Q_U - self.Q

    def with_state(self, rho) -> "QuantumModel":
        return QuantumModel(self.U, rho, self.Q, projection=self.projection, label=self.label)

    def particle_hole(self) -> "QuantumModel":
        """Same model with ``rho`` replaced by ``1 - rho``."""
        return self.with_state(self.rho_prime)

    # serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "U": _encode(self.U),
            "rho": _encode(self.rho),
            "Q": _encode(self.Q),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "QuantumModel":
        try:
            dim = int(data["dim"])
            mats = [_decode(data[k], k) for k in ("U", "rho", "Q")]
        except KeyError as exc:
            raise InvalidMatrix(f"model is missing field {exc.args[0]!r}") from None
        for name, m in zip(("U", "rho", "Q"), mats):
            if m.shape != (dim, dim):
                raise InvalidMatrix(f"model field {name!r} has shape {m.shape}, expected ({dim}, {dim})")
        return cls(*mats)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "QuantumModel":
        return cls.from_dict(json.loads(text))


def _encode(M: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in M]


def _decode(rows, name: str) -> np.ndarray:
    try:
        arr = np.asarray(rows, dtype=float)
    except (TypeError, ValueError):
        raise InvalidMatrix(f"model field {name!r} is not a matrix of [re, im] pairs") from None
    if arr.ndim != 3 or arr.shape[-1] != 2:
        raise InvalidMatrix(f"model field {name!r} is not a matrix of [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def commutator_norm(A, B) -> float:
    return float(np.max(np.abs(commutator(np.asarray(A), np.asarray(B)))))


# standard states ----------------------------------------------------------


def fermi_dirac(H, beta: float, mu: float = 0.0) -> np.ndarray:
    """Thermal occupation ``(1 + exp(beta (H - mu)))^-1``."""
    if not (np.isfinite(beta) and beta > 0):
        raise ValueError(f"beta must be finite and positive, got {beta}")
    return matrix_function(H, lambda x: expit(-beta * (x - mu)))


def fermi_sea(H, mu: float = 0.0) -> np.ndarray:
    """Projection onto the eigenvectors of `H` with eigenvalue below `mu`.

    Raises
    ------
    DegenerateFermiLevel
        If an eigenvalue lies within 1e-9 of `mu`; perturb `mu` instead.
    """
    w, V = hermitian_eig(H)
    close = np.abs(w - mu) < FERMI_LEVEL_GAP
    if np.any(close):
        raise DegenerateFermiLevel(f"eigenvalue {w[close][0]!r} is within {FERMI_LEVEL_GAP} of mu={mu!r}")
    occ = (w < mu).astype(float)
    return (V * occ) @ dagger(V)


# validation -----------------------------------------------------------------


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tol: float
    passed: bool


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[Check, ...]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def failures(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {c.name: {"value": c.value, "tol": c.tol, "passed": c.passed} for c in self.checks}


def validate(model: QuantumModel) -> ValidationReport:
    """Residuals of the model invariants.  Never raises on finite input."""
    U, rho, Q = model.U, model.rho, model.Q
    n = model.dim
    checks = []

    unit = float(np.max(np.abs(dagger(U) @ U - np.eye(n))))
    checks.append(Check("unitarity", unit, UNITARY_TOL, unit <= UNITARY_TOL))

    herm = float(np.max(np.abs(rho - dagger(rho))))
    checks.append(Check("rho_hermitian", herm, HERMITIAN_TOL, herm <= HERMITIAN_TOL))
    w = np.linalg.eigvalsh(0.5 * (rho + dagger(rho)))
    excess = float(max(0.0, -w[0], w[-1] - 1.0))
    checks.append(Check("rho_bounds", excess, OCCUPATION_WINDOW, excess <= OCCUPATION_WINDOW))

    qherm = float(np.max(np.abs(Q - dagger(Q))))
    checks.append(Check("Q_hermitian", qherm, HERMITIAN_TOL, qherm <= HERMITIAN_TOL))
    if model.projection:
        proj = float(np.max(np.abs(Q @ Q - Q)))
        checks.append(Check("Q_projection", proj, PROJECTION_TOL, proj <= PROJECTION_TOL))

    comm = commutator_norm(Q, rho)
    # a model that claims [Q, rho] = 0 must satisfy it; otherwise the value is informational
    checks.append(Check("commutator", comm, COMMUTING_TOL, comm <= COMMUTING_TOL or not model.commuting))
    return ValidationReport(tuple(checks))


# random instances -----------------------------------------------------------


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary from the QR decomposition of a Ginibre matrix."""
    Z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(Z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    Z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return 0.5 * (Z + dagger(Z))


def random_model(seed: int, dim: int, kind: ModelKind = "mixed-commuting") -> QuantumModel:
    """Deterministic random model for property tests.

    ``Q`` is a diagonal 0/1 projection of rank between 1 and ``dim - 1``.
    For the commuting kinds ``rho`` is diagonal in the same basis (0/1
    entries for ``pure-commuting``); for ``mixed-general`` it is a generic
    Hermitian matrix with spectrum in (0, 1).
    """
    if dim < 2:
        raise ValueError(f"dim must be >= 2, got {dim}")
    rng = np.random.default_rng(seed)
    U = haar_unitary(dim, rng)
    rank = int(rng.integers(1, dim))
    q = np.zeros(dim)
    q[rng.choice(dim, size=rank, replace=False)] = 1.0
    Q = np.diag(q).astype(complex)
    if kind == "pure-commuting":
        rho = np.diag(rng.integers(0, 2, size=dim).astype(float)).astype(complex)
    elif kind == "mixed-commuting":
        rho = np.diag(rng.uniform(0.0, 1.0, size=dim)).astype(complex)
    elif kind == "mixed-general":
        V = haar_unitary(dim, rng)
        nu = rng.uniform(0.02, 0.98, size=dim)
        rho = (V * nu) @ dagger(V)
        rho = 0.5 * (rho + dagger(rho))
    else:
        raise ValueError(f"unknown model kind {kind!r}")
    return QuantumModel(U, rho, Q, label=f"random:{kind}:{seed}:{dim}")
