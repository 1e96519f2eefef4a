import numpy as np
import pytest

from fcs.model import QuantumModel, haar_unitary


@pytest.fixture
def rng():
    return np.random.default_rng(20261017)


def two_mode_transfer(t2: float, occupied: str = "left") -> QuantumModel:
    """One fermion in mode 0 (left) scattered into mode 1 (the lead) with probability `t2`."""
    r, t = np.sqrt(1 - t2), np.sqrt(t2)
    U = np.array([[r, -t], [t, r]], dtype=complex)
    rho = np.diag([1.0, 0.0] if occupied == "left" else [0.0, 1.0])
    Q = np.diag([0.0, 1.0])
    return QuantumModel(U, rho, Q)


def identity_model(dim: int, rng) -> QuantumModel:
    nu = rng.uniform(0, 1, dim)
    Q = np.diag((np.arange(dim) % 2).astype(float))
    return QuantumModel(np.eye(dim), np.diag(nu), Q)


def non_commuting_model(dim: int, rng) -> QuantumModel:
    V = haar_unitary(dim, rng)
    rho = (V * rng.uniform(0.05, 0.95, dim)) @ V.conj().T
    Q = np.diag((np.arange(dim) < dim // 2).astype(float))
    return QuantumModel(haar_unitary(dim, rng), 0.5 * (rho + rho.conj().T), Q)


ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, title: str, passed: bool, detail: str) -> None:
    line = f"criterion {number:2d} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
