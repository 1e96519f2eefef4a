"""Generating functions of transferred charge as single-particle determinants.

All variants take a :class:`~fcs.model.QuantumModel` and a counting field
``lam`` and return ``chi(lam)``:

``les_lev``
    two measurements of the lead charge, ``det(rho' + e^{i lam Q_U} e^{-i lam Q} rho)``;
    needs ``[Q, rho] = 0``.
``regularized``
    the same determinant with compensating phases distributed on both
    sides, stable when the lead is made large.
``single_measurement``
    one measurement of ``U^H Q U - Q``.
``collapse``
    two measurements without assuming ``[Q, rho] = 0``.
``spin_coupling``
    spin-detector scheme; its Fourier coefficients may be negative.

Here ``rho' = 1 - rho``, ``Q_U = U^H Q U``, ``rho_U = U^H rho U``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from math import comb
from typing import Callable

import numpy as np
import scipy.linalg

from .errors import NonCommutingState, NonIntegerSpectrum, StepUnderflow, UnwrapFailure
from .linalg import dagger, det, hermitian_eig
from .model import QuantumModel
from .partitions import CumulantVector, MomentVector, moments_to_cumulants

log = logging.getLogger(__name__)

CHI0_TOL = 1e-8
NEGATIVITY_TOL = 1e-9
MAX_K = 6
BASE_STEP = 1e-2
RICHARDSON_LEVELS = 4


# --------------------------------------------------------------------------
# matrix exponentials with optional reuse across lambda


class Workspace:
    """Caches eigendecompositions of the model operators entering ``e^{i lam X}``.

    The determinant functions build a fresh one per call unless given one.
    Sharing one between threads is safe: the cache only ever gains entries,
    and concurrent fills store identical values.
    """

    def __init__(self, model: QuantumModel):
        self.model = model
        self._eig: dict[str, tuple[np.ndarray, np.ndarray] | None] = {}

    def operator(self, key: str) -> np.ndarray:
        m = self.model
        if key == "Q":
            return m.Q
        if key == "Q_U":
            return m.Q_U
        if key == "dQ":
            return m.delta_Q
        if key == "rhoQ":
            return m.rho @ m.Q
        if key == "rhopQ":
            return m.rho_prime @ m.Q
        if key == "rhoUQU":
            return m.rho_U @ m.Q_U
        if key == "rhopUQU":
            return dagger(m.U) @ m.rho_prime @ m.U @ m.Q_U
        raise KeyError(key)

    def expi(self, key: str, lam: complex) -> np.ndarray:
        """``exp(i lam X)`` for the operator named `key`."""
        if key in _CONJUGATED:
            # exp(i lam U^H X U) = U^H exp(i lam X) U
            U = self.model.U
            return dagger(U) @ self.expi(_CONJUGATED[key], lam) @ U
        if key not in self._eig:
            X = self.operator(key)
            if np.max(np.abs(X - dagger(X)), initial=0.0) <= 1e-12:
                self._eig[key] = hermitian_eig(X, tol=1e-12)
            else:
                self._eig[key] = None
        ev = self._eig[key]
        if ev is None:
            return scipy.linalg.expm(1j * lam * self.operator(key))
        w, V = ev
        return (V * np.exp(1j * lam * w)) @ dagger(V)


_CONJUGATED = {"Q_U": "Q", "rhoUQU": "rhoQ", "rhopUQU": "rhopQ"}


def _ws(model: QuantumModel, workspace: Workspace | None) -> Workspace:
    return workspace if workspace is not None else Workspace(model)


# --------------------------------------------------------------------------
# the determinant formulas


def chi_les_lev(model: QuantumModel, lam: complex, workspace: Workspace | None = None) -> complex:
    """``det(rho' + e^{i lam U^H Q U} e^{-i lam Q} rho)``.

    Raises
    ------
    NonCommutingState
        If the model does not satisfy ``[Q, rho] = 0``.
    """
    if not model.commuting:
        raise NonCommutingState("the two-measurement determinant needs [Q, rho] = 0; "
                                "use chi_collapse for non-commuting states")
    ws = _ws(model, workspace)
    M = model.rho_prime + ws.expi("Q_U", lam) @ ws.expi("Q", -lam) @ model.rho
    return det(M)


def chi_regularized(model: QuantumModel, lam: complex, workspace: Workspace | None = None) -> complex:
    """Regularized determinant
    ``det(e^{-i lam rho_U Q_U} rho' e^{i lam rho Q} + e^{i lam rho'_U Q_U} rho e^{-i lam rho' Q})``.
    """
    ws = _ws(model, workspace)
    left = ws.expi("rhoUQU", -lam) @ model.rho_prime @ ws.expi("rhoQ", lam)
    right = ws.expi("rhopUQU", lam) @ model.rho @ ws.expi("rhopQ", -lam)
    return det(left + right)


def chi_single_measurement(model: QuantumModel, lam: complex, workspace: Workspace | None = None) -> complex:
    """``det(rho' + e^{i lam (U^H Q U - Q)} rho)``."""
    ws = _ws(model, workspace)
    return det(model.rho_prime + ws.expi("dQ", lam) @ model.rho)


def _check_integer_spectrum(Q: np.ndarray) -> None:
    w = np.linalg.eigvalsh(0.5 * (Q + dagger(Q)))
    dev = float(np.max(np.abs(w - np.rint(w))))
    if dev > 1e-8:
        raise NonIntegerSpectrum(f"Q has non-integer eigenvalues (deviation {dev:.2e})")


def chi_collapse(model: QuantumModel, lam: complex, workspace: Workspace | None = None) -> complex:
    """Two measurements with collapse at the first one.

    Averages ``det(rho' + e^{i tau Q} U^H e^{i lam Q} U e^{-i (lam + tau) Q} rho)``
    over ``tau``.  The integrand is a trigonometric polynomial in ``tau`` of
    degree at most ``dim``, so ``dim + 1`` equally spaced nodes are exact.
    """
    _check_integer_spectrum(model.Q)
    ws = _ws(model, workspace)
    n = model.dim + 1
    W = dagger(model.U) @ ws.expi("Q", lam) @ model.U
    total = 0j
    for k in range(n):
        tau = 2 * np.pi * k / n
        total += det(model.rho_prime + ws.expi("Q", tau) @ W @ ws.expi("Q", -(lam + tau)) @ model.rho)
    return total / n


def chi_spin_coupling(model: QuantumModel, lam: complex, workspace: Workspace | None = None) -> complex:
    """Spin-detector generating function
    ``det(rho' + e^{-i lam Q/2} U^H e^{i lam Q} U e^{-i lam Q/2} rho)``.

    Coincides with :func:`chi_les_lev` when ``[Q, rho] = 0``; otherwise its
    Fourier coefficients are in general not all non-negative.
    """
    ws = _ws(model, workspace)
    half = ws.expi("Q", -lam / 2)
    X = half @ dagger(model.U) @ ws.expi("Q", lam) @ model.U @ half
    return det(model.rho_prime + X @ model.rho)


VARIANTS: dict[str, Callable[..., complex]] = {
    "les-lev": chi_les_lev,
    "regularized": chi_regularized,
    "single-measurement": chi_single_measurement,
    "collapse": chi_collapse,
    "spin-coupling": chi_spin_coupling,
}


def chi_function(model: QuantumModel, variant: str = "les-lev", reuse: bool = True) -> Callable[[complex], complex]:
    """Bind `model` and `variant` into a function of ``lam``.

    With ``reuse`` eigendecompositions are shared between calls through one
    :class:`Workspace`.
    """
    try:
        f = VARIANTS[variant]
    except KeyError:
        raise ValueError(f"unknown variant {variant!r}; expected one of {sorted(VARIANTS)}") from None
    if reuse:
        ws = Workspace(model)
        return lambda lam: f(model, lam, ws)
    return lambda lam: f(model, lam)


# --------------------------------------------------------------------------
# sampled generating functions


@dataclass(frozen=True)
class CountingDistribution:
    """Probabilities ``p[i]`` of transferring ``(n_min + i) / denominator`` charges.

    ``quasi`` marks a normalized distribution with negative entries.
    ``denominator`` is 1 except for spin-coupling quasiprobabilities of
    non-commuting states, which live on the half-integers.
    """

    n_min: int
    p: np.ndarray
    quasi: bool = False
    imag_residue: float = 0.0
    denominator: int = 1

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        object.__setattr__(self, "p", p)

    @property
    def n(self) -> np.ndarray:
        k = np.arange(self.n_min, self.n_min + len(self.p))
        return k if self.denominator == 1 else k / self.denominator

    @property
    def n_max(self):
        top = self.n_min + len(self.p) - 1
        return top if self.denominator == 1 else top / self.denominator

    def __getitem__(self, n) -> float:
        i = int(round(n * self.denominator)) - self.n_min
        return float(self.p[i]) if 0 <= i < len(self.p) else 0.0

    def total(self) -> float:
        return float(np.sum(self.p))

    def trimmed(self, tol: float = 1e-13) -> "CountingDistribution":
        """Drop leading and trailing entries with ``|p| <= tol``."""
        keep = np.nonzero(np.abs(self.p) > tol)[0]
        if len(keep) == 0:
            return self
        lo, hi = keep[0], keep[-1]
        return CountingDistribution(self.n_min + int(lo), self.p[lo:hi + 1], self.quasi, self.imag_residue,
                                    self.denominator)

    def moments(self, k_max: int) -> MomentVector:
        n = self.n.astype(float)
        return MomentVector(np.array([np.sum(self.p * n**k) for k in range(1, k_max + 1)]))

    def cumulants(self, k_max: int) -> CumulantVector:
        c = moments_to_cumulants(self.moments(k_max))
        return CumulantVector(c.values, method="distribution")


@dataclass(frozen=True)
class ChiSamples:
    """``chi`` on the uniform grid ``2 pi periods k / M`` with a continuous logarithm.

    ``chi`` keeps the evaluator so that derived quantities may resample it
    (cumulants are taken from a fine grid near 0, not from this one).
    ``periods = 2`` is used when ``chi`` has half-integer frequencies.
    """

    lambdas: np.ndarray
    values: np.ndarray
    log_values: np.ndarray | None
    chi: Callable[[complex], complex] | None = field(default=None, compare=False, repr=False)
    variant: str = ""
    n_min: int | None = None
    periods: int = 1

    @property
    def size(self) -> int:
        return len(self.lambdas)


def _phase_step(chi, a: float, b: float, za: complex, zb: complex, depth: int) -> float:
    """Continuous change of ``arg chi`` from `a` to `b`.

    The interval is accepted once it and both of its halves turn the phase
    by less than ``pi/4`` (so the three steps are mutually consistent);
    otherwise it is bisected.  Without an evaluator only the
    nearest-branch step is available and it must stay below ``pi/2``.
    """
    if zb == 0 or not np.isfinite(zb):
        raise UnwrapFailure(f"chi vanishes or is not finite at lambda={b!r}")
    step = float(np.angle(zb / za))
    if chi is None:
        if abs(step) >= np.pi / 2:
            raise UnwrapFailure(
                f"phase of chi jumps by {step:.3f} rad between lambda={a:.6g} and {b:.6g}; "
                "the branch cannot be continued"
            )
        return step
    mid = 0.5 * (a + b)
    zm = complex(chi(mid))
    if zm == 0 or not np.isfinite(zm):
        raise UnwrapFailure(f"chi vanishes or is not finite at lambda={mid!r}")
    s1, s2 = float(np.angle(zm / za)), float(np.angle(zb / zm))
    if max(abs(step), abs(s1), abs(s2)) < np.pi / 4:
        return s1 + s2
    if depth == 0:
        raise UnwrapFailure(f"phase of chi cannot be followed near lambda={mid:.6g}")
    return (_phase_step(chi, a, mid, za, zm, depth - 1)
            + _phase_step(chi, mid, b, zm, zb, depth - 1))


def continued_log(chi, lambdas, values=None, max_depth: int = 20) -> np.ndarray:
    """``log chi`` along increasing `lambdas`, continued from ``log chi(lambdas[0])`` (principal).

    Between consecutive points the phase change is resolved by bisection
    with fresh evaluations of `chi`.  A phase that cannot be followed (a zero
    of ``chi`` on the path) raises :class:`UnwrapFailure`.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    if values is None:
        values = np.array([complex(chi(l)) for l in lambdas])
    values = np.asarray(values, dtype=complex)
    if np.any(values == 0):
        raise UnwrapFailure("chi vanishes on the grid; log chi is undefined")
    phase = np.empty(len(lambdas))
    phase[0] = np.angle(values[0])
    for k in range(1, len(lambdas)):
        phase[k] = phase[k - 1] + _phase_step(chi, lambdas[k - 1], lambdas[k],
                                              values[k - 1], values[k], max_depth)
    return np.log(np.abs(values)) + 1j * phase


def sample_function(chi: Callable[[complex], complex], M: int, variant: str = "",
                    n_min: int | None = None, unwrap: bool = True, map_fn=map,
                    periods: int = 1) -> ChiSamples:
    """Sample an arbitrary generating function on ``2 pi periods k / M``, ``k = 0..M-1``.

    With ``unwrap=False`` no logarithm is computed (``log_values`` is None);
    cumulants and distributions do not need it, and it does not exist when
    ``chi`` has a zero on the real axis.  `map_fn` evaluates ``chi`` over
    the grid (e.g. ``executor.map``); it must preserve order.

    Raises
    ------
    UnwrapFailure
        If ``arg chi`` changes by ``pi`` or more between neighbouring grid
        points (the grid is too coarse; use a larger `M`), or if ``chi``
        vanishes on the way.
    """
    if M < 2:
        raise ValueError(f"grid size must be >= 2, got {M}")
    if periods not in (1, 2):
        raise ValueError(f"periods must be 1 or 2, got {periods}")
    lambdas = 2 * np.pi * periods * np.arange(M) / M
    values = np.array([complex(z) for z in map_fn(chi, lambdas)])
    if abs(values[0] - 1) > CHI0_TOL:
        raise ValueError(f"chi(0) = {values[0]!r} is not normalized")
    values[0] = 1.0
    logs = None
    if unwrap:
        logs = continued_log(chi, lambdas, values)
        jumps = np.abs(np.diff(logs.imag))
        if np.any(jumps >= np.pi):
            k = int(np.argmax(jumps))
            raise UnwrapFailure(
                f"phase of chi changes by {jumps[k]:.3f} rad between grid points {k} and {k + 1}; "
                f"increase the grid size (M={M})"
            )
    return ChiSamples(lambdas, values, logs, chi=chi, variant=variant, n_min=n_min, periods=periods)


def sample_chi(model: QuantumModel, variant: str = "les-lev", M: int = 64, unwrap: bool = True,
               map_fn=map) -> ChiSamples:
    """Sample ``chi`` of `model` on a uniform grid of `M` points over one period.

    The period is ``2 pi``, except for the spin-coupling variant of a
    non-commuting model: its half-integer frequencies need ``[0, 4 pi)``.
    """
    periods = half_periods(model, variant)
    need = periods * (2 * model.dim + 2)
    if M < need:
        log.warning("grid size %d is below %d; the distribution may alias", M, need)
    return sample_function(chi_function(model, variant), M, variant=variant, unwrap=unwrap, map_fn=map_fn,
                           periods=periods)


def half_periods(model: QuantumModel, variant: str) -> int:
    """Number of ``2 pi`` periods needed to resolve all frequencies of ``chi``."""
    return 2 if variant == "spin-coupling" and not model.commuting else 1


# --------------------------------------------------------------------------
# cumulants and distributions


def _central_difference(g: Callable[[np.ndarray], np.ndarray], k: int, h: float) -> complex:
    j = np.arange(k + 1)
    weights = (-1.0) ** j * np.array([comb(k, int(i)) for i in j])
    nodes = (k / 2 - j) * h
    return complex(np.sum(weights * g(nodes)) / h**k)


def derivatives_at_zero(g: Callable[[np.ndarray], np.ndarray], k_max: int,
                        h: float = BASE_STEP, levels: int = RICHARDSON_LEVELS,
                        rtol: float = 1e-4) -> np.ndarray:
    """Derivatives ``g^(k)(0)``, ``k = 1..k_max``, by central differences and Richardson extrapolation.

    Order ``k`` uses the steps ``k h 2^j``, ``j < levels``; the growth with
    ``k`` keeps the ``h^-k`` round-off amplification in check.  The
    extrapolation is accepted when its last correction is below
    ``rtol * max(1, |value|)``.
    """
    out = np.empty(k_max, dtype=complex)
    for k in range(1, k_max + 1):
        hk = h * k
        table = [[_central_difference(g, k, hk * 2**j)] for j in range(levels)]
        # extrapolate from the largest step down so the last entry uses all levels
        table = table[::-1]
        for m in range(1, levels):
            for i in range(m, levels):
                fine, coarse = table[i][m - 1], table[i - 1][m - 1]
                table[i].append(fine + (fine - coarse) / (4**m - 1))
        best, prev = table[-1][-1], table[-1][-2]
        scale = max(abs(best), 1.0)
        if not np.isfinite(best) or abs(best - prev) > rtol * scale:
            raise StepUnderflow(
                f"Richardson extrapolation of derivative {k} did not converge "
                f"(last correction {abs(best - prev):.2e})"
            )
        out[k - 1] = best
    return out


def cumulants_from_chi(samples: ChiSamples, k_max: int = 4) -> CumulantVector:
    """Cumulants ``(-i d/dlam)^k log chi`` at ``lam = 0`` for ``k = 1..k_max``.

    The logarithm is continued from ``lam = 0`` on a local stencil, so large
    means (fast phase winding) are handled.
    """
    if not 1 <= k_max <= MAX_K:
        raise ValueError(f"k_max must be in 1..{MAX_K}, got {k_max}")
    if samples.chi is None:
        raise ValueError("samples carry no evaluator; build them with sample_chi or sample_function")
    chi = samples.chi

    def g(nodes: np.ndarray) -> np.ndarray:
        nodes = np.asarray(nodes, dtype=float)
        out = np.empty(len(nodes), dtype=complex)
        for sign in (1, -1):
            sel = np.nonzero(sign * nodes > 0)[0]
            if len(sel) == 0:
                continue
            order = sel[np.argsort(sign * nodes[sel])]
            path = np.concatenate([[0.0], sign * nodes[order]])
            logs = continued_log(lambda x: chi(sign * x), path, np.array([1.0] + [chi(l) for l in nodes[order]]))
            out[order] = logs[1:]
        out[nodes == 0] = 0.0
        return out

    d = derivatives_at_zero(g, k_max)
    kappa = ((-1j) ** np.arange(1, k_max + 1)) * d
    return CumulantVector(kappa.real, method="finite-difference",
                          meta={"max_imag": float(np.max(np.abs(kappa.imag)))})


def distribution_from_chi(samples: ChiSamples) -> CountingDistribution:
    """Invert ``chi(lam) = sum_n p_n e^{i lam n}`` by a discrete Fourier transform.

    Transfers are assigned to the window of `M` consecutive multiples of
    ``1 / samples.periods`` starting at ``samples.n_min`` (in those units;
    default: centred on 0).  Entries below ``-1e-9`` flag the result as a
    quasiprobability.
    """
    M = samples.size
    coeffs = np.fft.fft(samples.values) / M  # coeffs[n mod M] = p_n
    n_min = samples.n_min if samples.n_min is not None else -((M - 1) // 2)
    n = np.arange(n_min, n_min + M)
    p = coeffs[n % M]
    residue = float(np.max(np.abs(p.imag)))
    if residue > 1e-9:
        log.warning("imaginary residue %.2e in inverted distribution", residue)
    real = p.real
    quasi = bool(np.any(real < -NEGATIVITY_TOL))
    return CountingDistribution(n_min, real, quasi, residue, samples.periods).trimmed()


# --------------------------------------------------------------------------
# trace formulas


def mean_charge(model: QuantumModel) -> tuple[float, float]:
    """Mean transfer as ``tr rho (Q_U - Q)`` and as ``tr (rho - rho_U) Q_U``.

    The second form is the one that survives when the lead is made infinite;
    at finite dimension the two agree.
    """
    naive = np.trace(model.rho @ model.delta_Q).real
    regularized = np.trace((model.rho - model.rho_U) @ model.Q_U).real
    return float(naive), float(regularized)


def noise_trace(model: QuantumModel) -> float:
    """Second cumulant ``tr rho dQ (1 - rho) dQ`` with ``dQ = U^H Q U - Q``."""
    dQ = model.delta_Q
    return float(np.trace(model.rho @ dQ @ model.rho_prime @ dQ).real)


def noise_split(model: QuantumModel) -> tuple[float, float]:
    """Split of the second cumulant into ``(thermal, shot)``.

    ``thermal = tr(rho (1 - rho) dQ^2)`` vanishes for pure states;
    ``shot = tr((i [dQ, rho])^2) / 2``.  Both are non-negative.
    """
    dQ = model.delta_Q
    rho = model.rho
    thermal = np.trace(rho @ model.rho_prime @ dQ @ dQ).real
    c = 1j * (dQ @ rho - rho @ dQ)
    shot = 0.5 * np.trace(c @ c).real
    return float(thermal), float(shot)


def trace_cumulants(model: QuantumModel) -> CumulantVector:
    """First two cumulants from the trace formulas (valid for ``[Q, rho] = 0``)."""
    return CumulantVector(np.array([mean_charge(model)[0], noise_trace(model)]), method="trace-formula")
