"""Full counting statistics of non-interacting fermions.

Generating functions of transferred charge are computed as single-particle
determinants (:mod:`fcs.counting`) and checked against brute-force
second quantization (:mod:`fcs.fock`).
"""

from .counting import (
    ChiSamples,
    CountingDistribution,
    chi_collapse,
    chi_function,
    chi_les_lev,
    chi_regularized,
    chi_single_measurement,
    chi_spin_coupling,
    cumulants_from_chi,
    distribution_from_chi,
    mean_charge,
    noise_split,
    noise_trace,
    sample_chi,
    sample_function,
)
from .errors import FCSError
from .limit import cutoff_sweep, regularization_identity_check, trace_class_diagnostics
from .model import QuantumModel, fermi_dirac, fermi_sea, random_model, validate
from .partitions import CumulantVector, MomentVector, cumulants_to_moments, moments_to_cumulants
from .scattering import (
    ScatteringMatrix,
    TwoCircleSpec,
    binomial_chi,
    build_two_circle,
    poisson_chi,
    reference_noise,
    thermal_two_circle,
)

__all__ = [
    "ChiSamples", "CountingDistribution", "CumulantVector", "FCSError", "MomentVector", "QuantumModel",
    "ScatteringMatrix", "TwoCircleSpec", "binomial_chi", "build_two_circle", "chi_collapse", "chi_function",
    "chi_les_lev", "chi_regularized", "chi_single_measurement", "chi_spin_coupling", "cumulants_from_chi",
    "cumulants_to_moments", "cutoff_sweep", "distribution_from_chi", "fermi_dirac", "fermi_sea", "mean_charge",
    "moments_to_cumulants", "noise_split", "noise_trace", "poisson_chi", "random_model", "reference_noise",
    "regularization_identity_check", "sample_chi", "sample_function", "thermal_two_circle",
    "trace_class_diagnostics", "validate",
]
