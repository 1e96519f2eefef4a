"""Finite-dimensional checks of the regularization and of the trace-class hypotheses.

At finite dimension the naive and the regularized determinants differ only
by the phase ``exp(i lam tr(rho_U Q_U - rho Q))``.  When the lead is made
large that trace grows without bound while the regularized determinant
stays put; :func:`cutoff_sweep` shows this on the two-circle model.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .counting import Workspace, chi_les_lev, chi_regularized
from .linalg import dagger, det, matrix_function, op_norm, trace_norm
from .model import QuantumModel
from .scattering import ScatteringMatrix, TwoCircleSpec, build_two_circle, thermal_two_circle

DEFAULT_PROBES = (np.pi / 4, np.pi / 2, np.pi, 3 * np.pi / 2)
SCHEMA = 1


def _les_lev_det(model: QuantumModel, lam: float, ws: Workspace) -> complex:
    # the bare determinant, also evaluated when [Q, rho] != 0
    if model.commuting:
        return chi_les_lev(model, lam, ws)
    return det(model.rho_prime + ws.expi("Q_U", lam) @ ws.expi("Q", -lam) @ model.rho)


def trace_shift(model: QuantumModel) -> float:
    """``tr(rho_U Q_U - rho Q)``: the phase per unit ``lam`` between the two determinants."""
    return float(np.trace(model.rho_U @ model.Q_U - model.rho @ model.Q).real)


def regularization_identity_check(model: QuantumModel, lambda_probes=DEFAULT_PROBES) -> float:
    """Max over probes of ``|chi_reg e^{i lam c} - chi_les_lev|`` with ``c`` from :func:`trace_shift`.

    The identity is exact for ``[Q, rho] = 0``.  For other states the bare
    determinant is used as the reference and the deviation is generally not
    small.
    """
    ws = Workspace(model)
    c = trace_shift(model)
    dev = 0.0
    for lam in lambda_probes:
        reg = chi_regularized(model, lam, ws) * np.exp(1j * lam * c)
        dev = max(dev, abs(reg - _les_lev_det(model, lam, ws)))
    return float(dev)


def _sqrt_psd(A: np.ndarray) -> np.ndarray:
    return matrix_function(A, lambda w: np.sqrt(np.clip(w, 0.0, None)))


def trace_class_diagnostics(model: QuantumModel) -> dict[str, float]:
    """Trace norms whose finiteness the infinite-lead theory assumes.

    ``d_rho = |rho - U rho U^H|_1``,
    ``d_sqrt = |rho^1/2 - U rho^1/2 U^H|_1 + |rho'^1/2 - U rho'^1/2 U^H|_1``,
    ``d_mix = |(rho rho')^1/2 Q|_1`` and
    ``d_noise = |(U^H Q U - Q)(rho rho')^1/2|_1``.
    """
    U, rho = model.U, model.rho
    rotate = lambda A: U @ A @ dagger(U)  # noqa: E731
    mix = _sqrt_psd(rho @ model.rho_prime)
    sq, sqp = _sqrt_psd(rho), _sqrt_psd(model.rho_prime)
    return {
        "d_rho": trace_norm(rho - rotate(rho)),
        "d_sqrt": trace_norm(sq - rotate(sq)) + trace_norm(sqp - rotate(sqp)),
        "d_mix": trace_norm(mix @ model.Q),
        "d_noise": trace_norm(model.delta_Q @ mix),
    }


def noise_bound(model: QuantumModel) -> float:
    """Hoelder bound ``|U^H Q U - Q|_op |(rho rho')^1/2|_1`` on ``d_noise``."""
    return op_norm(model.delta_Q) * trace_norm(_sqrt_psd(model.rho @ model.rho_prime))


def junction_chain(n: int, transmission: float, nu: float = 0.5, contact: int = 1) -> QuantumModel:
    """Two leads of `n` sites each, coupled only at the `contact` sites next to the junction.

    Every site carries occupation `nu`; ``U`` applies the junction
    scattering matrix to the pairs (left site j, right site j) with
    ``j < contact`` and leaves the rest alone.  ``d_mix`` then grows like
    `n` while ``d_noise`` does not depend on it.
    """
    if not 1 <= contact <= n:
        raise ValueError(f"contact must be in 1..{n}, got {contact}")
    S = ScatteringMatrix.from_transmission(transmission).matrix
    block = np.zeros(n)
    block[:contact] = 1.0
    P, Pc = np.diag(block), np.diag(1.0 - block)
    U = np.kron(S, P) + np.kron(np.eye(2), Pc)
    rho = nu * np.eye(2 * n)
    Q = np.diag(np.concatenate([np.zeros(n), np.ones(n)]))
    return QuantumModel(U, rho, Q, commuting=True, projection=True, label=f"junction-chain:{n}")


# --------------------------------------------------------------------------
# cutoff sweeps


@dataclass(frozen=True)
class SweepRecord:
    cutoff: float
    dim: int
    chi_reg: np.ndarray
    chi_naive: np.ndarray
    tr_rhoQ: float
    tr_shift: float
    identity_deviation: float
    diagnostics: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SweepReport:
    cutoffs: tuple[float, ...]
    probes: tuple[float, ...]
    records: tuple[SweepRecord, ...]
    beta: float | None = None

    def chi_reg_drift(self) -> float:
        """Largest change of ``chi_reg`` at any probe relative to the first cutoff."""
        ref = self.records[0].chi_reg
        return float(max(np.max(np.abs(r.chi_reg - ref)) for r in self.records))

    def max_identity_deviation(self) -> float:
        return float(max(r.identity_deviation for r in self.records))

    def tr_rhoQ(self) -> np.ndarray:
        return np.array([r.tr_rhoQ for r in self.records])

    def to_dict(self) -> dict:
        recs = []
        for r in self.records:
            recs.append({
                "cutoff": r.cutoff,
                "dim": r.dim,
                "chi_reg": [[float(z.real), float(z.imag)] for z in r.chi_reg],
                "chi_naive": [[float(z.real), float(z.imag)] for z in r.chi_naive],
                "tr_rhoQ": r.tr_rhoQ,
                "tr_shift": r.tr_shift,
                "identity_deviation": r.identity_deviation,
                "diagnostics": dict(r.diagnostics),
            })
        return {
            "fcs-schema": SCHEMA,
            "beta": self.beta,
            "probes": list(self.probes),
            "cutoffs": list(self.cutoffs),
            "chi_reg_drift": self.chi_reg_drift(),
            "records": recs,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self) -> str:
        """One row per cutoff; complex probe values split into real and imaginary columns."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        head = ["cutoff", "dim", "tr_rhoQ", "tr_shift", "identity_deviation"]
        for j in range(len(self.probes)):
            head += [f"re_chi_reg_{j}", f"im_chi_reg_{j}", f"re_chi_naive_{j}", f"im_chi_naive_{j}"]
        diag_keys = sorted(self.records[0].diagnostics) if self.records else []
        w.writerow(head + diag_keys)
        for r in self.records:
            row = [repr(float(r.cutoff)), r.dim, repr(r.tr_rhoQ), repr(r.tr_shift), repr(r.identity_deviation)]
            for a, b in zip(r.chi_reg, r.chi_naive):
                row += [repr(float(a.real)), repr(float(a.imag)), repr(float(b.real)), repr(float(b.imag))]
            row += [repr(float(r.diagnostics[k])) for k in diag_keys]
            w.writerow(row)
        return buf.getvalue()


def _sweep_record(spec: TwoCircleSpec, beta: float | None, probes, diagnostics: bool) -> SweepRecord:
    model = build_two_circle(spec) if beta is None else thermal_two_circle(spec, beta)
    ws = Workspace(model)
    reg = np.array([chi_regularized(model, l, ws) for l in probes])
    naive = np.array([chi_les_lev(model, l, ws) for l in probes])
    shift = trace_shift(model)
    dev = float(np.max(np.abs(reg * np.exp(1j * np.asarray(probes) * shift) - naive)))
    return SweepRecord(
        cutoff=float(spec.cutoff),
        dim=model.dim,
        chi_reg=reg,
        chi_naive=naive,
        tr_rhoQ=float(np.trace(model.rho @ model.Q).real),
        tr_shift=shift,
        identity_deviation=dev,
        diagnostics=trace_class_diagnostics(model) if diagnostics else {},
    )


def cutoff_sweep(spec: TwoCircleSpec, cutoffs, lambda_probes=DEFAULT_PROBES, beta: float | None = None,
                 diagnostics: bool = True, workers: int = 1) -> SweepReport:
    """Rebuild the two-circle model at each cutoff and record both determinants.

    ``beta=None`` gives the zero-temperature model, otherwise the thermal one.
    Records are independent and may be computed by `workers` threads; the
    result does not depend on the worker count.
    """
    cutoffs = [float(c) for c in cutoffs]
    if not cutoffs:
        raise ValueError("at least one cutoff is needed")
    if any(b <= a for a, b in zip(cutoffs, cutoffs[1:])):
        raise ValueError("cutoffs must be strictly ascending")
    probes = tuple(float(l) for l in lambda_probes)
    specs = [spec.with_cutoff(c) for c in cutoffs]
    job = lambda s: _sweep_record(s, beta, probes, diagnostics)  # noqa: E731
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            records = list(ex.map(job, specs))
    else:
        records = [job(s) for s in specs]
    return SweepReport(tuple(cutoffs), probes, tuple(records), beta)
