"""Exception hierarchy shared by all ``fcs`` modules."""


class FCSError(Exception):
    """Base class for every error raised by the package."""


class InvalidMatrix(FCSError, ValueError):
    """Input is not a finite square matrix."""


class NotHermitian(FCSError, ValueError):
    def __init__(self, deviation: float, tol: float):
        self.deviation = deviation
        self.tol = tol
        super().__init__(
            f"matrix is not Hermitian: max|M - M^H| = {deviation:.3e} > {tol:.1e}"
        )


class SingularMatrix(FCSError, ArithmeticError):
    """A pivot of the LU factorization vanished."""


class DegenerateFermiLevel(FCSError, ValueError):
    """An eigenvalue or grid momentum sits on the chemical potential."""


class SpectrumOutOfRange(FCSError, ValueError):
    """A one-particle density matrix has eigenvalues outside [0, 1]."""


class DimensionTooLarge(FCSError, ValueError):
    """Fock space construction requested beyond the supported dimension."""


class NonIntegerSpectrum(FCSError, ValueError):
    """The charge operator does not have an integer spectrum."""


class NonCommutingState(FCSError, ValueError):
    """A formula requiring [Q, rho] = 0 was applied to a model without it."""


class NumericalFailure(FCSError, ArithmeticError):
    """Base class for failures of the numerical pipelines (CLI exit code 3)."""


class UnwrapFailure(NumericalFailure):
    """The phase of chi could not be continued unambiguously along the grid."""


class StepUnderflow(NumericalFailure):
    """Richardson extrapolation of a finite-difference derivative did not converge."""


class EmptyWindow(FCSError, ValueError):
    """No momentum grid point lies in the bias window."""


class CutoffTooSmall(FCSError, ValueError):
    """The momentum cutoff does not contain the Fermi tails."""


class UnknownKind(FCSError, ValueError):
    """An unknown closed-form reference was requested."""
