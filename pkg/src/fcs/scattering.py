"""Two-lead junction on circles and closed-form noise references.

Two leads are circles of circumference ``T`` on which particles move with
velocity 1, so one turn takes time ``T`` and momenta lie on the grid
``(2 pi / T) Z``.  In one turn every particle passes the junction once and
is scattered by the 2x2 matrix ``S = [[r, t'], [t, r']]`` acting on the
(left, right) components.  The lead charge ``Q`` projects onto the right
circle.

Sign convention: occupations are ``theta(mu_i - p)``.  Momenta with
``mu_R < p <= mu_L`` are filled on the left only and contribute transfers
*into* the right lead (factor ``q + p e^{i lam}``); momenta with
``mu_L < p <= mu_R`` contribute transfers out of it (``q + p e^{-i lam}``).
The bias is ``V = mu_L - mu_R``; positive ``V`` gives a positive mean
transfer into the right lead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import CutoffTooSmall, DegenerateFermiLevel, EmptyWindow, UnknownKind
from .model import FERMI_LEVEL_GAP, QuantumModel

SMATRIX_TOL = 1e-12
TAIL_WIDTHS = 10.0


@dataclass(frozen=True)
class ScatteringMatrix:
    """Reflection and transmission amplitudes from the left (``r, t``) and the right (``r', t'``)."""

    r: complex
    t: complex
    r_prime: complex
    t_prime: complex

    def __post_init__(self):
        dev = float(np.max(np.abs(self.matrix.conj().T @ self.matrix - np.eye(2))))
        if dev > SMATRIX_TOL:
            raise ValueError(f"scattering matrix is not unitary (residual {dev:.2e})")

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.r, self.t_prime], [self.t, self.r_prime]], dtype=complex)

    @property
    def transmission(self) -> float:
        """Transmission probability ``|t|^2``."""
        return float(abs(self.t) ** 2)

    @classmethod
    def from_transmission(cls, transmission: float, phase: float = 0.0) -> "ScatteringMatrix":
        """Symmetric junction with ``|t|^2 = transmission`` and an optional global phase."""
        if not 0.0 <= transmission <= 1.0:
            raise ValueError(f"transmission must lie in [0, 1], got {transmission}")
        r = np.sqrt(1.0 - transmission)
        t = 1j * np.sqrt(transmission)
        g = np.exp(1j * phase)
        return cls(g * r, g * t, g * r, g * t)

    @classmethod
    def from_matrix(cls, S) -> "ScatteringMatrix":
        S = np.asarray(S, dtype=complex)
        return cls(S[0, 0], S[1, 0], S[1, 1], S[0, 1])


@dataclass(frozen=True)
class TwoCircleSpec:
    S: ScatteringMatrix
    T: float
    mu_L: float
    mu_R: float
    cutoff: float

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError(f"circumference T must be positive, got {self.T}")
        if self.cutoff < max(abs(self.mu_L), abs(self.mu_R)):
            raise CutoffTooSmall(
                f"cutoff {self.cutoff} is below max(|mu_L|, |mu_R|) = {max(abs(self.mu_L), abs(self.mu_R))}"
            )
        if len(self.momenta()) == 0:
            raise EmptyWindow("no momentum grid point lies within the cutoff")

    def momenta(self) -> np.ndarray:
        """Grid ``(2 pi / T) m`` restricted to ``[-cutoff, cutoff]``."""
        step = 2 * np.pi / self.T
        m = np.arange(int(np.ceil(-self.cutoff / step - 1e-12)), int(np.floor(self.cutoff / step + 1e-12)) + 1)
        return step * m

    @property
    def bias(self) -> float:
        return self.mu_L - self.mu_R

    def with_cutoff(self, cutoff: float) -> "TwoCircleSpec":
        return TwoCircleSpec(self.S, self.T, self.mu_L, self.mu_R, cutoff)


def window_counts(spec: TwoCircleSpec) -> tuple[int, int]:
    """``(n_in, n_out)``: momenta in ``(mu_R, mu_L]`` and in ``(mu_L, mu_R]``."""
    p = spec.momenta()
    n_in = int(np.count_nonzero((p > spec.mu_R) & (p <= spec.mu_L)))
    n_out = int(np.count_nonzero((p > spec.mu_L) & (p <= spec.mu_R)))
    return n_in, n_out


def window_count(spec: TwoCircleSpec) -> int:
    """Signed number of attempts: positive when transfer goes into the right lead."""
    n_in, n_out = window_counts(spec)
    return n_in - n_out


def _lead_model(spec: TwoCircleSpec, occ_L: np.ndarray, occ_R: np.ndarray, **flags) -> QuantumModel:
    n = len(occ_L)
    U = np.kron(spec.S.matrix, np.eye(n))
    rho = np.diag(np.concatenate([occ_L, occ_R])).astype(complex)
    Q = np.diag(np.concatenate([np.zeros(n), np.ones(n)])).astype(complex)
    return QuantumModel(U, rho, Q, commuting=True, projection=True, **flags)


def build_two_circle(spec: TwoCircleSpec) -> QuantumModel:
    """Zero-temperature two-circle model.

    The Hilbert space is ``C^n + C^n`` (left circle, right circle) over the
    ``n`` grid momenta; ``U = S (x) 1``.

    Raises
    ------
    DegenerateFermiLevel
        If a grid momentum coincides with ``mu_L`` or ``mu_R``.
    EmptyWindow
        If no grid momentum lies between the two chemical potentials.
    """
    p = spec.momenta()
    for name, mu in (("mu_L", spec.mu_L), ("mu_R", spec.mu_R)):
        if np.any(np.abs(p - mu) < FERMI_LEVEL_GAP):
            raise DegenerateFermiLevel(f"{name}={mu!r} lies on the momentum grid; shift it")
    if sum(window_counts(spec)) == 0:
        raise EmptyWindow(f"no grid momentum between mu_L={spec.mu_L!r} and mu_R={spec.mu_R!r}")
    occ_L = (p < spec.mu_L).astype(float)
    occ_R = (p < spec.mu_R).astype(float)
    return _lead_model(spec, occ_L, occ_R, pure=True, label="two-circle")


def thermal_two_circle(spec: TwoCircleSpec, beta: float) -> QuantumModel:
    """Two-circle model with Fermi-Dirac occupations ``(1 + e^{beta (p - mu_i)})^-1``.

    Raises
    ------
    CutoffTooSmall
        Unless ``cutoff >= max |mu_i| + 10 / beta``.
    """
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    need = max(abs(spec.mu_L), abs(spec.mu_R)) + TAIL_WIDTHS / beta
    if spec.cutoff < need - 1e-12:
        raise CutoffTooSmall(f"cutoff {spec.cutoff} does not contain the Fermi tails (need >= {need})")
    p = spec.momenta()
    occ_L = expit(-beta * (p - spec.mu_L))
    occ_R = expit(-beta * (p - spec.mu_R))
    return _lead_model(spec, occ_L, occ_R, pure=False, label="thermal-two-circle")


def conductance(transmission: float) -> float:
    """Two-terminal conductance ``|t|^2 / 2 pi`` (``e = hbar = 1``)."""
    return transmission / (2 * np.pi)


def grid_bias(spec: TwoCircleSpec) -> float:
    """Bias equivalent of the grid window: ``2 pi N / T`` with the signed count ``N``."""
    return 2 * np.pi * window_count(spec) / spec.T


# closed forms ---------------------------------------------------------------


def binomial_chi(p: float, N: int, lam):
    """``(1 - p + p e^{i lam})^N``."""
    return (1.0 - p + p * np.exp(1j * np.asarray(lam))) ** N


def poisson_chi(rate: float, lam):
    """``exp(rate (e^{i lam} - 1))``; all cumulants equal `rate`."""
    return np.exp(rate * (np.exp(1j * np.asarray(lam)) - 1.0))


def two_circle_chi(spec: TwoCircleSpec, lam):
    """Closed form for :func:`build_two_circle`: binomial in both transfer directions."""
    n_in, n_out = window_counts(spec)
    p = spec.S.transmission
    lam = np.asarray(lam)
    return binomial_chi(p, n_in, lam) * binomial_chi(p, n_out, -lam)


def reference_noise(kind: str, **params) -> float:
    """Closed-form noise values (charge unit ``e = 1``).

    ``johnson-nyquist(G, beta)``
        equilibrium noise per unit time, ``2 G / beta``.
    ``schottky(meanQ)``
        classical shot noise ``<<Q^2>> = <Q>``.
    ``lesovik-khlus(meanQ, transmission)``
        quantum shot noise ``<Q> (1 - |t|^2)``.
    ``ohm(transmission, V, T)``
        mean charge ``G V T`` with ``G = |t|^2 / 2 pi``.
    """
    try:
        if kind == "johnson-nyquist":
            return 2.0 * params["G"] / params["beta"]
        if kind == "schottky":
            return float(params["meanQ"])
        if kind == "lesovik-khlus":
            return params["meanQ"] * (1.0 - params["transmission"])
        if kind == "ohm":
            return conductance(params["transmission"]) * params["V"] * params["T"]
    except KeyError as exc:
        raise ValueError(f"reference {kind!r} needs parameter {exc.args[0]!r}") from None
    raise UnknownKind(f"unknown reference noise {kind!r}")
