"""
Validated quantum states and the constructors used throughout the package.

Basis order: |down> -> 0, |up> -> 1, leftmost qubit most significant.
Experiment I registers are ordered (M, A, B).
"""
from typing import Any, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from app import qmath

STATE_TOL = 1e-10
PSD_TOL = 1e-9

DOWN = np.array([1, 0], dtype=complex)
UP = np.array([0, 1], dtype=complex)


def _n_qubits_for(dim: int) -> int:
    n = int(round(np.log2(dim))) if dim > 0 else -1
    if n < 1 or 2**n != dim:
        raise ValueError(f"dimension {dim} is not 2^n for n >= 1")
    return n


class DensityMatrix(BaseModel):
    """Hermitian, unit-trace, positive semidefinite 2^n x 2^n matrix."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    n_qubits: int
    matrix: Any

    @field_validator("matrix", mode="before")
    @classmethod
    def _as_array(cls, value):
        return qmath.as_cmat(value)

    @model_validator(mode="after")
    def _check_state(self):
        m = self.matrix
        if m.shape != (2**self.n_qubits, 2**self.n_qubits):
            raise ValueError(f"matrix shape {m.shape} does not fit {self.n_qubits} qubits")
        asym = qmath.hermitian_asymmetry(m)
        if asym > STATE_TOL:
            raise ValueError(f"density matrix not Hermitian (asymmetry {asym:.3e})")
        tr = np.trace(m).real
        if abs(tr - 1.0) > STATE_TOL:
            raise ValueError(f"density matrix trace is {tr:.12f}, expected 1")
        lowest = qmath.herm_eig(m).eigenvalues[0]
        if lowest < -PSD_TOL:
            raise ValueError(f"density matrix has negative eigenvalue {lowest:.3e}")
        return self

    @classmethod
    def from_matrix(cls, matrix) -> "DensityMatrix":
        m = qmath.as_cmat(matrix)
        return cls(n_qubits=_n_qubits_for(m.shape[0]), matrix=m)

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def reduced(self, keep: Sequence[int]) -> "DensityMatrix":
        """Reduced state on the qubits in `keep` (in that order)."""
        m = qmath.partial_trace(self.matrix, [2] * self.n_qubits, keep)
        return DensityMatrix(n_qubits=len(keep), matrix=m)

    def evolve(self, h, t: float) -> "DensityMatrix":
        return DensityMatrix(n_qubits=self.n_qubits, matrix=qmath.evolve(self.matrix, h, t))


class PureState(BaseModel):
    """Normalized amplitude vector of length 2^n."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    n_qubits: int
    amplitudes: Any

    @field_validator("amplitudes", mode="before")
    @classmethod
    def _as_vector(cls, value):
        arr = np.asarray(value, dtype=complex).reshape(-1)
        if not np.all(np.isfinite(arr)):
            raise ValueError("amplitudes have non-finite entries")
        return arr

    @model_validator(mode="after")
    def _check_norm(self):
        if self.amplitudes.shape != (2**self.n_qubits,):
            raise ValueError(
                f"{self.amplitudes.shape[0]} amplitudes do not fit {self.n_qubits} qubits"
            )
        norm = np.linalg.norm(self.amplitudes)
        if abs(norm - 1.0) > STATE_TOL:
            raise ValueError(f"state norm is {norm:.12f}, expected 1")
        return self

    @classmethod
    def from_amplitudes(cls, amplitudes) -> "PureState":
        arr = np.asarray(amplitudes, dtype=complex).reshape(-1)
        return cls(n_qubits=_n_qubits_for(arr.shape[0]), amplitudes=arr)

    def projector(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())

    def density(self) -> DensityMatrix:
        return DensityMatrix(n_qubits=self.n_qubits, matrix=self.projector())


def basis_state(bits: Sequence[int]) -> PureState:
    """Computational basis state; bit 0 is down, bit 1 is up."""
    amps = np.zeros(2 ** len(bits), dtype=complex)
    amps[int("".join(str(int(b)) for b in bits), 2)] = 1.0
    return PureState(n_qubits=len(bits), amplitudes=amps)


def product_state(*singles: np.ndarray) -> PureState:
    vec = np.ones(1, dtype=complex)
    for s in singles:
        vec = np.kron(vec, np.asarray(s, dtype=complex))
    return PureState.from_amplitudes(vec / np.linalg.norm(vec))


def bell_phi_plus() -> PureState:
    """(|down up> + |up down>)/sqrt(2)."""
    return PureState(n_qubits=2, amplitudes=np.array([0, 1, 1, 0]) / np.sqrt(2))


def bell_psi_plus() -> PureState:
    """(|down down> + |up up>)/sqrt(2)."""
    return PureState(n_qubits=2, amplitudes=np.array([1, 0, 0, 1]) / np.sqrt(2))


def spin_coherent(theta: float, phi: float, n_qubits: int = 2) -> PureState:
    """Tensor power of cos(theta/2)|up> + e^{i phi} sin(theta/2)|down>."""
    if not 0.0 <= theta <= np.pi:
        raise ValueError(f"theta={theta} outside [0, pi]")
    if not 0.0 <= phi < 2 * np.pi:
        raise ValueError(f"phi={phi} outside [0, 2pi)")
    if n_qubits < 1:
        raise ValueError("n_qubits must be >= 1")
    single = np.array([np.exp(1j * phi) * np.sin(theta / 2), np.cos(theta / 2)])
    return product_state(*([single] * n_qubits))


def pseudo_pure(n_qubits: int, epsilon: float) -> DensityMatrix:
    """(1 - eps)/2^N * I + eps |down...down><down...down|."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon={epsilon} outside [0, 1]")
    dim = 2**n_qubits
    m = (1.0 - epsilon) / dim * np.eye(dim, dtype=complex)
    m[0, 0] += epsilon
    return DensityMatrix(n_qubits=n_qubits, matrix=m)


def pseudo_pure_purity(n_qubits: int, epsilon: float) -> float:
    dim = 2**n_qubits
    return (1 - epsilon) ** 2 / dim + epsilon**2 + 2 * epsilon * (1 - epsilon) / dim


def sigma_x_projectors() -> tuple[np.ndarray, np.ndarray]:
    """Projectors onto the +1/2 and -1/2 eigenstates of sigma_x."""
    plus = np.array([1, 1], dtype=complex) / np.sqrt(2)
    minus = np.array([-1, 1], dtype=complex) / np.sqrt(2)
    return np.outer(plus, plus.conj()), np.outer(minus, minus.conj())


def rho_mab_initial() -> DensityMatrix:
    """1/2 rho_M+ (x) |phi+><phi+| + 1/2 rho_M- (x) |psi+><psi+| on (M, A, B)."""
    m_plus, m_minus = sigma_x_projectors()
    m = 0.5 * np.kron(m_plus, bell_phi_plus().projector())
    m += 0.5 * np.kron(m_minus, bell_psi_plus().projector())
    return DensityMatrix(n_qubits=3, matrix=m)
