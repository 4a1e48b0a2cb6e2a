"""
Gate-level statevector simulation with shot sampling for the experiment I
equivalent circuits.

Register convention: |0> is spin up (m = +1/2) and |1> is spin down, qubit 0
most significant. A measured bit 0 therefore means m = +1/2 in every basis,
so tomogram outcome indices are bitwise complements of the measured bit
strings and register amplitudes become spin-ordered by index reversal.

Usage:
  circuit = build_equivalent_circuit(math.pi / 2)
  shots = tomogram_from_shots(circuit, n_shots=8192, repetitions=6, seed=1)
  print(shots.mean, shots.std)
"""
import math
from typing import Literal, NamedTuple, Optional, Sequence, Union

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app import qmath
from app.errors import ConfigError
from app.indicators import average_indicators
from app.models import Bipartition
from app.states import DensityMatrix, PureState
from app.tomography import Tomogram, all_axes

GateName = Literal["H", "X", "RX", "SDG", "CNOT", "CRX"]
CONTROLLED = {"CNOT", "CRX"}
ROTATIONS = {"RX", "CRX"}
INITIAL_VARIANTS = ("theta_zero", "compact")

_H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_SDG = np.array([[1, 0], [0, -1j]], dtype=complex)


def rx_matrix(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


class Gate(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: GateName
    target: int = Field(ge=0)
    control: Optional[int] = Field(default=None, ge=0)
    angle: Optional[float] = None

    @model_validator(mode="after")
    def _check_operands(self):
        if (self.name in CONTROLLED) != (self.control is not None):
            raise ValueError(f"{self.name}: control qubit given for the wrong gate kind")
        if self.control is not None and self.control == self.target:
            raise ValueError(f"{self.name}: control and target are both qubit {self.target}")
        if (self.name in ROTATIONS) != (self.angle is not None):
            raise ValueError(f"{self.name}: angle given for the wrong gate kind")
        return self

    def target_matrix(self) -> np.ndarray:
        """2x2 operator applied to the target (when the control is 1)."""
        if self.name == "H":
            return _H
        if self.name in ("X", "CNOT"):
            return _X
        if self.name == "SDG":
            return _SDG
        return rx_matrix(self.angle)

    @property
    def matrix(self) -> np.ndarray:
        """Full gate matrix; controlled gates are 4x4 with the control first."""
        u = self.target_matrix()
        if self.control is None:
            return u
        full = np.eye(4, dtype=complex)
        full[2:, 2:] = u
        return full

    def to_text(self) -> str:
        parts = [self.name, str(self.target)]
        if self.control is not None:
            parts.append(str(self.control))
        if self.angle is not None:
            parts.append(repr(float(self.angle)))
        return " ".join(parts)


class Circuit(BaseModel):
    """Ordered gates on n qubits plus the measurement basis per measured qubit."""

    n_qubits: int = Field(ge=1)
    gates: list[Gate] = Field(default_factory=list)
    bases: dict[int, Literal["x", "y", "z"]] = Field(default_factory=dict)
    label: str = ""

    @model_validator(mode="after")
    def _check_indices(self):
        for gate in self.gates:
            for q in (gate.target, gate.control):
                if q is not None and q >= self.n_qubits:
                    raise ValueError(f"gate {gate.to_text()!r} uses qubit {q} of {self.n_qubits}")
        for q in self.bases:
            if not 0 <= q < self.n_qubits:
                raise ValueError(f"measured qubit {q} out of range")
        return self

    @property
    def measured(self) -> list[int]:
        return sorted(self.bases)

    def measure(self, qubits: Sequence[int], basis: str = "z") -> "Circuit":
        return self.model_copy(update={"bases": {**self.bases, **{q: basis for q in qubits}}})


class ShotResult(BaseModel):
    counts: dict[str, int]
    n_shots: int = Field(ge=1)
    seed: list[int]
    qubits: list[int]

    @model_validator(mode="after")
    def _check_total(self):
        total = sum(self.counts.values())
        if total != self.n_shots:
            raise ValueError(f"counts sum to {total}, expected {self.n_shots}")
        return self

    def frequencies(self) -> np.ndarray:
        """Relative frequencies indexed by register bit string."""
        freq = np.zeros(2 ** len(self.qubits))
        for bits, count in self.counts.items():
            freq[int(bits, 2)] = count / self.n_shots
        return freq


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------

def _apply_single(psi: np.ndarray, u: np.ndarray, axis: int) -> np.ndarray:
    return np.moveaxis(np.tensordot(u, psi, axes=([1], [axis])), 0, axis)


def _apply(psi: np.ndarray, gate: Gate) -> np.ndarray:
    u = gate.target_matrix()
    if gate.control is None:
        return _apply_single(psi, u, gate.target)
    out = psi.copy()
    index = [slice(None)] * psi.ndim
    index[gate.control] = 1
    # the control axis disappears from the slice
    axis = gate.target - (1 if gate.target > gate.control else 0)
    out[tuple(index)] = _apply_single(psi[tuple(index)], u, axis)
    return out


def simulate_statevector(circuit: Circuit) -> PureState:
    """Register amplitudes after applying every gate to |0...0>."""
    n = circuit.n_qubits
    psi = np.zeros([2] * n, dtype=complex)
    psi[(0,) * n] = 1.0
    for gate in circuit.gates:
        psi = _apply(psi, gate)
    return PureState(n_qubits=n, amplitudes=psi.reshape(-1))


def to_spin_order(amplitudes: np.ndarray) -> np.ndarray:
    return np.asarray(amplitudes)[::-1]


def register_marginal(circuit: Circuit, keep: Sequence[int]) -> DensityMatrix:
    """Reduced state of `keep` in spin ordering."""
    psi = to_spin_order(simulate_statevector(circuit).amplitudes)
    rho = np.outer(psi, psi.conj())
    reduced = qmath.partial_trace(rho, [2] * circuit.n_qubits, list(keep))
    return DensityMatrix.from_matrix(0.5 * (reduced + reduced.conj().T))


def basis_change(circuit: Circuit, bases: dict[int, str]) -> Circuit:
    """Append H for x and SDG then H for y; z needs nothing."""
    gates = list(circuit.gates)
    for q, basis in sorted(bases.items()):
        if basis == "y":
            gates.append(Gate(name="SDG", target=q))
        if basis in ("x", "y"):
            gates.append(Gate(name="H", target=q))
        elif basis != "z":
            raise ConfigError(f"unknown measurement basis {basis!r} for qubit {q}")
    return Circuit(
        n_qubits=circuit.n_qubits,
        gates=gates,
        bases={**circuit.bases, **bases},
        label=circuit.label,
    )


def register_probabilities(circuit: Circuit, qubits: Optional[Sequence[int]] = None) -> np.ndarray:
    """Exact outcome probabilities of `qubits`, indexed by register bit string."""
    qubits = list(qubits if qubits is not None else (circuit.measured or range(circuit.n_qubits)))
    amps = simulate_statevector(circuit).amplitudes.reshape([2] * circuit.n_qubits)
    probs = np.abs(amps) ** 2
    dropped = tuple(q for q in range(circuit.n_qubits) if q not in qubits)
    reduced = probs.sum(axis=dropped) if dropped else probs
    reduced = np.transpose(reduced, [sorted(qubits).index(q) for q in qubits])
    return reduced.reshape(-1)


def make_rng(seed: Union[int, Sequence[int]]) -> np.random.Generator:
    """Counter-based generator keyed by the full seed tuple."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def sample_shots(circuit: Circuit, n_shots: int, seed: Union[int, Sequence[int]]) -> ShotResult:
    """Inverse-CDF multinomial draw over the measured qubits (all qubits if none)."""
    if n_shots < 1:
        raise ConfigError("n_shots must be at least 1")
    qubits = circuit.measured or list(range(circuit.n_qubits))
    probs = register_probabilities(circuit, qubits)
    cdf = np.cumsum(probs)
    draws = make_rng(seed).random(n_shots) * cdf[-1]
    outcomes = np.minimum(np.searchsorted(cdf, draws, side="right"), probs.size - 1)
    tally = np.bincount(outcomes, minlength=probs.size)
    width = len(qubits)
    counts = {format(i, f"0{width}b"): int(c) for i, c in enumerate(tally) if c}
    seed_list = [int(s) for s in np.atleast_1d(seed)]
    return ShotResult(counts=counts, n_shots=n_shots, seed=seed_list, qubits=qubits)


# ---------------------------------------------------------------------------
# Experiment I circuits
# ---------------------------------------------------------------------------

AB_QUBITS = [2, 3]


def build_equivalent_circuit(theta: float) -> Circuit:
    """q0 auxiliary, q1 M, q2 A, q3 B; the (q2, q3) marginal is rho_AB at chi*t = theta/4."""
    if not 0.0 <= theta < math.pi:
        raise ConfigError(f"theta={theta} outside [0, pi)")
    gates = [
        Gate(name="H", target=0),
        Gate(name="CNOT", target=1, control=0),
        Gate(name="H", target=1),
        Gate(name="H", target=2),
        Gate(name="CNOT", target=3, control=2),
        Gate(name="X", target=3),
        Gate(name="CNOT", target=3, control=0),
        Gate(name="RX", target=2, angle=theta),
        Gate(name="CRX", target=2, control=0, angle=-2 * theta),
    ]
    return Circuit(n_qubits=4, gates=gates, bases={q: "z" for q in AB_QUBITS}, label=f"theta={theta:g}")


def build_initial_state_circuit(variant: str = "theta_zero") -> Circuit:
    """Circuits whose (q2, q3) marginal is rho_AB(0)."""
    if variant == "theta_zero":
        circuit = build_equivalent_circuit(0.0)
        return circuit.model_copy(update={"label": "theta_zero"})
    if variant == "compact":
        gates = [
            Gate(name="H", target=0),
            Gate(name="H", target=2),
            Gate(name="CNOT", target=3, control=2),
            Gate(name="X", target=3),
            Gate(name="CNOT", target=3, control=0),
        ]
        return Circuit(n_qubits=4, gates=gates, bases={q: "z" for q in AB_QUBITS}, label="compact")
    raise ConfigError(f"unknown initial-state variant {variant!r}; valid: {', '.join(INITIAL_VARIANTS)}")


class ShotTomograms(NamedTuple):
    tomograms: list[Tomogram]
    xi_tei: list[float]
    mean: float
    std: float


def _spin_probs(register_probs: np.ndarray) -> np.ndarray:
    # bit string complement
    return np.asarray(register_probs, dtype=float)[::-1]


def tomogram_from_shots(
    circuit: Circuit,
    n_shots: int,
    repetitions: int,
    seed: int,
    exact: bool = False,
) -> ShotTomograms:
    """One empirical tomogram of the measured qubits per repetition, with xi_TEI statistics.

    With `exact` the probabilities are taken from the statevector instead of
    sampled, giving the infinite-shot limit through the same path.
    """
    if repetitions < 1:
        raise ConfigError("repetitions must be at least 1")
    qubits = circuit.measured
    if len(qubits) < 2:
        raise ConfigError("shot tomography needs at least two measured qubits")
    bipartition = Bipartition(side_a=(0,), side_b=tuple(range(1, len(qubits))))

    tomograms, values = [], []
    for rep in range(repetitions):
        slices = {}
        for k, axes in enumerate(all_axes(len(qubits))):
            rotated = basis_change(circuit, dict(zip(qubits, axes)))
            if exact:
                probs = register_probabilities(rotated, qubits)
            else:
                probs = sample_shots(rotated, n_shots, [seed, rep, k]).frequencies()
            slices[axes] = _spin_probs(probs)
        tomogram = Tomogram.build(len(qubits), slices)
        xi = average_indicators(tomogram, bipartition).xi_tei
        logger.debug(f"{circuit.label} repetition {rep}: xi_TEI = {xi:.4f}")
        tomograms.append(tomogram)
        values.append(xi)

    std = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
    return ShotTomograms(tomograms=tomograms, xi_tei=values, mean=float(np.mean(values)), std=std)


# ---------------------------------------------------------------------------
# Text format
# ---------------------------------------------------------------------------

def circuit_to_text(circuit: Circuit) -> str:
    lines = [f"# n_qubits {circuit.n_qubits}"]
    if circuit.label:
        lines.append(f"# label {circuit.label}")
    lines += [gate.to_text() for gate in circuit.gates]
    lines += [f"MEASURE {q} {basis}" for q, basis in sorted(circuit.bases.items())]
    return "\n".join(lines) + "\n"


def _parse_gate(tokens: list[str], lineno: int) -> Gate:
    name, args = tokens[0].upper(), tokens[1:]
    expected = 1 + (name in CONTROLLED) + (name in ROTATIONS)
    if len(args) != expected:
        raise ConfigError(f"line {lineno}: {name} takes {expected} operands, got {len(args)}")
    fields = {"name": name, "target": int(args[0])}
    if name in CONTROLLED:
        fields["control"] = int(args[1])
    if name in ROTATIONS:
        fields["angle"] = float(args[-1])
    return Gate(**fields)


def circuit_from_text(text: str) -> Circuit:
    n_qubits, label, gates, bases = None, "", [], {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        tokens = line.split()
        try:
            if tokens[0] == "#":
                if tokens[1:2] == ["n_qubits"]:
                    n_qubits = int(tokens[2])
                elif tokens[1:2] == ["label"]:
                    label = " ".join(tokens[2:])
            elif tokens[0].upper() == "MEASURE":
                bases[int(tokens[1])] = tokens[2]
            else:
                gates.append(_parse_gate(tokens, lineno))
        except (IndexError, ValueError) as exc:
            raise ConfigError(f"line {lineno}: cannot parse {line!r}: {exc}") from exc
    if n_qubits is None:
        raise ConfigError("circuit text has no '# n_qubits N' header")
    try:
        return Circuit(n_qubits=n_qubits, gates=gates, bases=bases, label=label)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
