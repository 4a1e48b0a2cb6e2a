"""
Spin Hamiltonians, case presets and time-series runners for the three NMR
experiments.

Experiment I: three qubits (M, A, B) under H_S = 4 chi (sigma_Ax + sigma_Bx) sigma_Mx,
analyzed on the reduced (A, B) state against the scaled time chi*t.
Experiments II and III: N = 2 or 3 driven, coupled spins
  H_N = sum_i (omega_i sigma_ix - Omega_i sigma_iz) + sum_{i<j} lambda_ij sigma_iz sigma_jz
started from the pseudo-pure state and sampled on a time grid in seconds.

Usage:
  run = run_experiment_I(ExperimentIConfig())
  run = run_experiment_N(preset("ii"))
"""
import math
from typing import Any, Optional, Sequence, Union

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, ValidationError

from app import qmath
from app.errors import ConfigError, CrossCheckError
from app.indicators import average_indicators, default_reduced_subset
from app.measures import discord, negativity, qmi
from app.models import (
    AnalysisSettings,
    Bipartition,
    DiscordResult,
    ExperimentIConfig,
    ExperimentNConfig,
    IndicatorReport,
    SqueezingReport,
    uniform_grid,
)
from app.squeezing import squeezing_report
from app.states import DensityMatrix, bell_phi_plus, bell_psi_plus, pseudo_pure, rho_mab_initial
from app.tomography import Tomogram, full_tomogram

CROSS_CHECK_TOL = 1e-10

CSV_COLUMNS = [
    "t", "xi_tei", "xi_tei_reduced", "xi_ipr", "xi_pcc", "xi_bd",
    "xi_qmi", "discord", "negativity", "extent1", "extent2",
]


def hz(frequency: float) -> float:
    """Angular frequency (rad/s) of a frequency quoted in Hz."""
    return 2 * math.pi * frequency


# ---------------------------------------------------------------------------
# Hamiltonians
# ---------------------------------------------------------------------------

def _zz(i: int, j: int, n: int) -> np.ndarray:
    return qmath.embed(qmath.SIGMA_Z, i, n) @ qmath.embed(qmath.SIGMA_Z, j, n)


def hamiltonian_I(j_am: float, j_bm: float, j_ab: float) -> np.ndarray:
    """Rotating-frame coupling Hamiltonian of (M, A, B); scalar couplings in Hz."""
    return (math.pi / 2) * (j_am * _zz(1, 0, 3) + j_bm * _zz(2, 0, 3) + j_ab * _zz(1, 2, 3))


def hamiltonian_S(chi: float) -> np.ndarray:
    """Effective Hamiltonian 4 chi (sigma_Ax + sigma_Bx) sigma_Mx on (M, A, B)."""
    sx = [qmath.embed(qmath.SIGMA_X, i, 3) for i in range(3)]
    return 4 * chi * (sx[1] + sx[2]) @ sx[0]


def hamiltonian_N(cfg: ExperimentNConfig) -> np.ndarray:
    n = cfg.n_qubits
    h = np.zeros((2**n, 2**n), dtype=complex)
    for i in range(n):
        h += cfg.omega[i] * qmath.embed(qmath.SIGMA_X, i, n)
        h -= cfg.big_omega[i] * qmath.embed(qmath.SIGMA_Z, i, n)
        for j in range(i + 1, n):
            h += cfg.lam[i][j] * _zz(i, j, n)
    return h


# ---------------------------------------------------------------------------
# Experiment I closed form
# ---------------------------------------------------------------------------

def psi_branches(chi_t: float) -> tuple[np.ndarray, np.ndarray]:
    """The two pure branches of rho_MAB(t), qubit order (M, A, B)."""
    c, s = math.cos(2 * chi_t), math.sin(2 * chi_t)
    phi, psi = bell_phi_plus().amplitudes, bell_psi_plus().amplitudes
    m_plus = np.array([1, 1], dtype=complex) / math.sqrt(2)
    m_minus = np.array([-1, 1], dtype=complex) / math.sqrt(2)
    psi_0 = np.kron(m_plus, c * phi - 1j * s * psi)
    psi_1 = np.kron(m_minus, c * psi + 1j * s * phi)
    return psi_0, psi_1


def rho_mab_closed_form(chi_t: float) -> np.ndarray:
    psi_0, psi_1 = psi_branches(chi_t)
    return 0.5 * (np.outer(psi_0, psi_0.conj()) + np.outer(psi_1, psi_1.conj()))


def rho_ab_closed_form(chi_t: float) -> np.ndarray:
    return qmath.partial_trace(rho_mab_closed_form(chi_t), [2, 2, 2], [1, 2])


# ---------------------------------------------------------------------------
# Presets
# ---------------------------------------------------------------------------

TWO_QUBIT_LAMBDA = hz(868.0)
THREE_QUBIT_LAMBDA = {(0, 1): hz(224.7), (0, 2): hz(-311.1), (1, 2): hz(49.7)}

PRESET_INFO = {
    "i": ("blockade: omega1/2pi = 217 Hz, omega2 = omega1", "19F, 31P"),
    "ii": ("freezing: omega2/2pi = 217 Hz, omega1 = omega2/4", "19F, 31P"),
    "iii": ("freezing: omega1/2pi = 217 Hz, omega2 = omega1/4", "19F, 31P"),
    "A": ("omega1/2pi = 10 Hz, omega1 = omega2 = omega3; cut 1|2,3", "13C, 1H, 19F"),
    "B": ("omega1/2pi = 50 Hz, omega1 = 5 omega2 = 5 omega3; cut 1|2,3", "13C, 1H, 19F"),
    "C": ("omega2/2pi = 50 Hz, omega2 = 5 omega1 = 5 omega3; cut 2|1,3", "13C, 1H, 19F"),
    "D": ("omega1/2pi = 50 Hz, omega1 = omega2 = 5 omega3; cut 1,2|3", "13C, 1H, 19F"),
}


def _two_qubit(omega: list[float]) -> dict:
    lam = TWO_QUBIT_LAMBDA
    return {
        "n_qubits": 2,
        "omega": omega,
        "big_omega": [lam / 2, lam / 2],
        "lam": [[0.0, lam], [lam, 0.0]],
        "bipartition": Bipartition(side_a=(0,), side_b=(1,)),
        "measured": [0],
    }


def _three_qubit(omega: list[float], side_a: tuple, side_b: tuple, measured: list[int]) -> dict:
    l12, l13, l23 = (THREE_QUBIT_LAMBDA[k] for k in [(0, 1), (0, 2), (1, 2)])
    return {
        "n_qubits": 3,
        "omega": omega,
        "big_omega": [(l12 + l13) / 2, (l12 + l23) / 2, (l13 + l23) / 2],
        "lam": [[0.0, l12, l13], [l12, 0.0, l23], [l13, l23, 0.0]],
        "bipartition": Bipartition(side_a=side_a, side_b=side_b),
        "measured": measured,
    }


def _preset_parameters(case: str) -> dict:
    w217, w50, w10 = hz(217.0), hz(50.0), hz(10.0)
    table = {
        "i": lambda: _two_qubit([w217, w217]),
        "ii": lambda: _two_qubit([w217 / 4, w217]),
        "iii": lambda: _two_qubit([w217, w217 / 4]),
        "A": lambda: _three_qubit([w10, w10, w10], (0,), (1, 2), [1, 2]),
        "B": lambda: _three_qubit([w50, w50 / 5, w50 / 5], (0,), (1, 2), [1, 2]),
        "C": lambda: _three_qubit([w50 / 5, w50, w50 / 5], (1,), (0, 2), [0, 2]),
        "D": lambda: _three_qubit([w50, w50, w50 / 5], (0, 1), (2,), [2]),
    }
    return table[case]()


def preset(
    case: str,
    t_grid: Optional[Sequence[float]] = None,
    epsilon: Optional[float] = None,
    analysis: Optional[AnalysisSettings] = None,
) -> ExperimentNConfig:
    """Configuration for one of the built-in cases i, ii, iii, A, B, C, D."""
    if case not in PRESET_INFO:
        raise ConfigError(f"unknown case {case!r}; valid cases: {', '.join(PRESET_INFO)}")
    params = _preset_parameters(case)
    params.update(case=case, description=PRESET_INFO[case][0])
    if t_grid is not None:
        params["t_grid"] = list(t_grid)
    if epsilon is not None:
        params["epsilon"] = epsilon
    if analysis is not None:
        params["analysis"] = analysis
    try:
        return ExperimentNConfig(**params)
    except ValidationError as exc:
        raise ConfigError(f"invalid parameters for case {case}: {exc}") from exc


def experiment_cases(experiment: str) -> list[str]:
    return {"II": ["i", "ii", "iii"], "III": ["A", "B", "C", "D"]}.get(experiment, [])


# ---------------------------------------------------------------------------
# Runs
# ---------------------------------------------------------------------------

class ExperimentRecord(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    t: float
    purity: float
    tomogram: Tomogram
    indicators: IndicatorReport
    qmi: float
    negativity: Optional[float] = None
    discord: Optional[DiscordResult] = None
    squeezing: SqueezingReport

    def csv_row(self) -> dict[str, Any]:
        reduced = self.indicators.reduced
        return {
            "t": self.t,
            "xi_tei": self.indicators.xi_tei,
            "xi_tei_reduced": reduced.xi_tei if reduced else None,
            "xi_ipr": self.indicators.xi_ipr,
            "xi_pcc": self.indicators.xi_pcc,
            "xi_bd": self.indicators.xi_bd,
            "xi_qmi": self.qmi,
            "discord": self.discord.value if self.discord else None,
            "negativity": self.negativity,
            "extent1": self.squeezing.extent_1,
            "extent2": self.squeezing.extent_2,
        }


class ExperimentRun(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    label: str
    time_unit: str
    config: Union[ExperimentIConfig, ExperimentNConfig]
    records: list[ExperimentRecord]

    def rows(self) -> list[dict[str, Any]]:
        return [r.csv_row() for r in self.records]


def analyze_state(
    rho: np.ndarray,
    t: float,
    bipartition: Bipartition,
    measured: Sequence[int],
    settings: AnalysisSettings,
    discord_start: Optional[Sequence[float]] = None,
) -> ExperimentRecord:
    """Tomogram, indicators, measures and squeezing for one instant.

    `discord_start` seeds the discord search with the optimum of the
    previous grid point.
    """
    state = DensityMatrix.from_matrix(rho)
    tomogram = full_tomogram(state.matrix)
    reduced = settings.reduced_subset or default_reduced_subset(state.n_qubits)
    indicators = average_indicators(
        tomogram, bipartition, reduced_subset=reduced, pcc_mode=settings.pcc_mode
    )

    disc = None
    if settings.compute_discord:
        unmeasured = [q for q in bipartition.qubits if q not in measured]
        disc = discord(
            state.matrix,
            measured,
            unmeasured,
            mode=settings.discord_mode,
            seed=settings.seed,
            restarts=settings.discord_restarts,
            grid=settings.discord_grid,
            warm_start=discord_start,
        )

    source = tomogram if settings.squeezing_source == "tomogram" else state.matrix
    squeezing = squeezing_report(
        source,
        t=t,
        n_samples=settings.n_samples,
        n_pairs=settings.n_pairs,
        seed=settings.seed,
        refine=settings.refine,
        orthonormal_pairs=settings.orthonormal_pairs,
    )
    return ExperimentRecord(
        t=t,
        purity=state.purity(),
        tomogram=tomogram,
        indicators=indicators,
        qmi=qmi(state.matrix, bipartition),
        negativity=negativity(state.matrix, bipartition),
        discord=disc,
        squeezing=squeezing,
    )


def run_experiment_I(cfg: ExperimentIConfig) -> ExperimentRun:
    """Experiment I on the chi*t grid, cross-checking evolution against the closed form."""
    logger.info(f"Experiment I: {len(cfg.chi_t_grid)} points")
    propagator = qmath.Propagator(hamiltonian_S(1.0))
    rho0 = rho_mab_initial().matrix
    bipartition = Bipartition(side_a=(0,), side_b=(1,))

    records = []
    start = None
    for chi_t in cfg.chi_t_grid:
        numeric = propagator.apply(rho0, chi_t)
        closed = rho_mab_closed_form(chi_t)
        deviation = float(np.linalg.norm(numeric - closed))
        if deviation > CROSS_CHECK_TOL:
            raise CrossCheckError(
                f"chi*t = {chi_t:.6f}: evolved state differs from closed form by {deviation:.3e}"
            )
        rho_ab = qmath.partial_trace(numeric, [2, 2, 2], [1, 2])
        record = analyze_state(rho_ab, chi_t, bipartition, [1], cfg.analysis, start)
        start = record.discord.parameters if record.discord else None
        records.append(record)

    logger.info("Experiment I finished")
    return ExperimentRun(label="I", time_unit="chi_t", config=cfg, records=records)


def run_experiment_N(cfg: ExperimentNConfig) -> ExperimentRun:
    """Evolve the pseudo-pure state under H_N and analyze every grid time."""
    logger.info(f"Case {cfg.case}: N={cfg.n_qubits}, {len(cfg.t_grid)} points, eps={cfg.epsilon:g}")
    propagator = qmath.Propagator(hamiltonian_N(cfg))
    rho0 = pseudo_pure(cfg.n_qubits, cfg.epsilon)
    purity0 = rho0.purity()

    records = []
    start = None
    for t in cfg.t_grid:
        rho = propagator.apply(rho0.matrix, t)
        purity = float(np.real(np.trace(rho @ rho)))
        if abs(purity - purity0) > CROSS_CHECK_TOL:
            raise CrossCheckError(f"t = {t:g} s: purity drifted from {purity0:.12f} to {purity:.12f}")
        record = analyze_state(rho, t, cfg.bipartition, cfg.measured, cfg.analysis, start)
        start = record.discord.parameters if record.discord else None
        records.append(record)

    logger.info(f"Case {cfg.case} finished")
    return ExperimentRun(label=cfg.case, time_unit="s", config=cfg, records=records)


def default_t_grid(t_max: float = 0.01, n_points: int = 101) -> list[float]:
    return uniform_grid(0.0, t_max, n_points)
