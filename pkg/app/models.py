"""Pydantic models for configuration, reports and file schemas."""
import math
import re
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from app import config

AXIS_LABELS = "xyz"
OUTCOME_CONVENTION = "0=-1/2,1=+1/2"
MAX_SEED = 2**64 - 1


# ---------------------------------------------------------------------------
# Tomogram file schema
# ---------------------------------------------------------------------------

class TomogramSliceRecord(BaseModel):
    axes: str
    probs: list[float]

    @field_validator("axes")
    @classmethod
    def _known_axes(cls, v: str) -> str:
        if not v or any(c not in AXIS_LABELS for c in v):
            raise ValueError(f"unknown axis label in {v!r}")
        return v


class TomogramFile(BaseModel):
    format_version: Literal[1] = 1
    n_qubits: int = Field(ge=1, le=3)
    outcome_convention: Literal["0=-1/2,1=+1/2"] = OUTCOME_CONVENTION
    slices: list[TomogramSliceRecord]


# ---------------------------------------------------------------------------
# Bipartitions
# ---------------------------------------------------------------------------

class Bipartition(BaseModel):
    """Two disjoint, nonempty groups of qubit indices."""

    model_config = {"frozen": True}

    side_a: tuple[int, ...]
    side_b: tuple[int, ...]

    @model_validator(mode="after")
    def _check_sides(self):
        if not self.side_a or not self.side_b:
            raise ValueError("both sides of a bipartition must be nonempty")
        qubits = self.side_a + self.side_b
        if len(set(qubits)) != len(qubits):
            raise ValueError(f"bipartition sides overlap: {self.label}")
        if min(qubits) < 0:
            raise ValueError("qubit indices must be non-negative")
        return self

    @classmethod
    def parse(cls, text: str) -> "Bipartition":
        """Parse "0|1", "0|1,2" or "01|2"."""
        parts = text.split("|")
        if len(parts) != 2:
            raise ValueError(f"bipartition {text!r} must look like '0|1,2'")
        sides = [tuple(int(d) for d in re.findall(r"\d", p)) for p in parts]
        return cls(side_a=sides[0], side_b=sides[1])

    @property
    def label(self) -> str:
        return f"{','.join(map(str, self.side_a))}|{','.join(map(str, self.side_b))}"

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.side_a + self.side_b

    def check_register(self, n_qubits: int) -> None:
        if max(self.qubits) >= n_qubits:
            raise ValueError(f"bipartition {self.label} does not fit {n_qubits} qubits")


# ---------------------------------------------------------------------------
# Indicator reports
# ---------------------------------------------------------------------------

class SliceIndicators(BaseModel):
    axes: str
    eps_tei: float
    eps_ipr: float
    eps_pcc: float
    eps_bd: float


class ReducedIndicators(BaseModel):
    subset: list[str]
    xi_tei: float
    xi_ipr: float
    xi_pcc: float
    xi_bd: float


class IndicatorReport(BaseModel):
    bipartition: Bipartition
    pcc_mode: str
    slices: list[SliceIndicators]
    included: list[str]
    complete: bool
    xi_tei: float
    xi_ipr: float
    xi_pcc: float
    xi_bd: float
    reduced: Optional[ReducedIndicators] = None


# ---------------------------------------------------------------------------
# Measures
# ---------------------------------------------------------------------------

class DiscordResult(BaseModel):
    value: float
    measured: list[int]
    unmeasured: list[int]
    mode: Literal["full", "product"]
    measured_entropy: float
    parameters: list[float]
    seed: int
    restarts: int
    objective_values: list[float]
    spread: float
    converged: bool


# ---------------------------------------------------------------------------
# Squeezing
# ---------------------------------------------------------------------------

class FirstOrderResult(BaseModel):
    var_min: float
    direction: list[float]
    var_min_sampled: float
    var_min_exact: float
    mean_spin_direction: Optional[list[float]] = None
    n_samples: int
    seed: int


class SecondOrderResult(BaseModel):
    var_min: float
    pair: tuple[list[float], list[float]]
    var_min_sampled: float
    max_abs_constraint: float
    n_pairs: int
    seed: int
    orthonormal_pairs: bool


class SqueezingReport(BaseModel):
    t: Optional[float] = None
    n_qubits: int
    source: Literal["density", "tomogram"]
    mean_spin_direction: Optional[list[float]] = None
    var_min_1: float
    var_min_1_sampled: float
    var_min_1_exact: float
    extent_1: float
    direction_1: list[float]
    n_samples: int
    var_min_2: Optional[float] = None
    var_min_2_sampled: Optional[float] = None
    extent_2: Optional[float] = None
    pair_2: Optional[tuple[list[float], list[float]]] = None
    n_pairs: Optional[int] = None


class EntropicSqueezingReport(BaseModel):
    qubit: int
    entropies: dict[str, float]
    threshold: float
    squeezed_axes: list[str]

    @property
    def squeezed(self) -> bool:
        return bool(self.squeezed_axes)


# ---------------------------------------------------------------------------
# Experiment configuration
# ---------------------------------------------------------------------------

class AnalysisSettings(BaseModel):
    """Sampler, optimizer and indicator options shared by all experiments."""

    seed: int = Field(default=config.DEFAULT_SEED, ge=0, le=MAX_SEED)
    n_samples: int = Field(default=config.DIRECTION_SAMPLES, ge=2)
    n_pairs: int = Field(default=config.PAIR_SAMPLES, ge=1)
    refine: bool = True
    orthonormal_pairs: bool = True
    squeezing_source: Literal["density", "tomogram"] = "tomogram"
    discord_mode: Literal["full", "product"] = "full"
    discord_restarts: int = Field(default=config.DISCORD_RESTARTS, ge=1)
    discord_grid: int = Field(default=config.DISCORD_GRID, ge=2)
    compute_discord: bool = True
    pcc_mode: Literal["collective", "max"] = "collective"
    reduced_subset: Optional[list[str]] = None


def _check_grid(values: list[float], name: str) -> list[float]:
    if not values:
        raise ValueError(f"{name} is empty")
    if any(not math.isfinite(v) for v in values):
        raise ValueError(f"{name} has non-finite entries")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ValueError(f"{name} must be strictly increasing")
    return values


def uniform_grid(start: float, stop: float, n_points: int) -> list[float]:
    if n_points < 1:
        raise ValueError("grid needs at least one point")
    if n_points == 1:
        return [float(start)]
    step = (stop - start) / (n_points - 1)
    return [start + k * step for k in range(n_points)]


class ExperimentIConfig(BaseModel):
    chi_t_grid: list[float] = Field(default_factory=lambda: uniform_grid(0.0, math.pi / 2, 65))
    analysis: AnalysisSettings = Field(default_factory=AnalysisSettings)

    @field_validator("chi_t_grid")
    @classmethod
    def _grid(cls, v: list[float]) -> list[float]:
        _check_grid(v, "chi_t_grid")
        if v[0] < -1e-12 or v[-1] > math.pi / 2 + 1e-12:
            raise ValueError("chi_t_grid must lie within [0, pi/2]")
        return v


class ExperimentNConfig(BaseModel):
    case: str
    description: str = ""
    n_qubits: Literal[2, 3]
    omega: list[float]
    big_omega: list[float]
    lam: list[list[float]]
    epsilon: float = Field(default=1e-4, ge=0.0, le=1.0)
    t_grid: list[float] = Field(default_factory=lambda: uniform_grid(0.0, 0.01, 101))
    bipartition: Bipartition
    measured: list[int]
    analysis: AnalysisSettings = Field(default_factory=AnalysisSettings)

    @field_validator("t_grid")
    @classmethod
    def _grid(cls, v: list[float]) -> list[float]:
        return _check_grid(v, "t_grid")

    @model_validator(mode="after")
    def _check_shapes(self):
        n = self.n_qubits
        if len(self.omega) != n or len(self.big_omega) != n:
            raise ValueError(f"omega and big_omega need {n} entries")
        if len(self.lam) != n or any(len(row) != n for row in self.lam):
            raise ValueError(f"lam must be {n}x{n}")
        for i in range(n):
            if self.lam[i][i] != 0.0:
                raise ValueError("lam must have a zero diagonal")
            for j in range(n):
                if self.lam[i][j] != self.lam[j][i]:
                    raise ValueError("lam must be symmetric")
        self.bipartition.check_register(n)
        if not self.measured or any(not 0 <= q < n for q in self.measured):
            raise ValueError(f"measured qubits {self.measured} invalid for {n} qubits")
        if not set(self.measured) <= set(self.bipartition.qubits):
            raise ValueError("measured qubits must lie inside the bipartition")
        if not (set(self.measured) == set(self.bipartition.side_a)
                or set(self.measured) == set(self.bipartition.side_b)):
            raise ValueError("measured qubits must be one side of the bipartition")
        return self


# ---------------------------------------------------------------------------
# Command-line run configuration
# ---------------------------------------------------------------------------

class RunConfig(BaseModel):
    experiment: Literal["I", "II", "III", "circuit", "tomogram", "reference"] = "I"
    case: Optional[str] = None
    seed: int = Field(default=config.DEFAULT_SEED, ge=0, le=MAX_SEED)
    out_dir: Path = config.OUTPUT_DIR
    # grids
    chi_t_points: int = Field(default=65, ge=1)
    t_max: float = Field(default=0.01, gt=0.0)
    t_points: int = Field(default=101, ge=1)
    epsilon: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    snapshots: list[float] = Field(default_factory=list)
    # analysis
    n_samples: int = Field(default=config.DIRECTION_SAMPLES, ge=2)
    n_pairs: int = Field(default=config.PAIR_SAMPLES, ge=1)
    reduced_slices: Optional[list[str]] = None
    discord_mode: Literal["full", "product"] = "full"
    discord_restarts: int = Field(default=config.DISCORD_RESTARTS, ge=1)
    discord_grid: int = Field(default=config.DISCORD_GRID, ge=2)
    compute_discord: bool = True
    orthonormal_pairs: bool = True
    pcc_mode: Literal["collective", "max"] = "collective"
    # circuits
    theta: Optional[float] = None
    variant: Optional[str] = None
    n_shots: int = Field(default=8192, ge=1)
    repetitions: int = Field(default=6, ge=1)
    exact: bool = False
    # tomogram analysis
    tomogram_path: Optional[Path] = None
    bipartition: Optional[str] = None
    normalization_tol: float = Field(default=config.NORMALIZATION_TOL, gt=0.0)

    @model_validator(mode="after")
    def _check_references(self):
        if self.experiment == "tomogram":
            if self.tomogram_path is None:
                raise ValueError("tomogram analysis needs tomogram_path")
            if not self.tomogram_path.exists():
                raise ValueError(f"tomogram file not found: {self.tomogram_path}")
        if self.bipartition is not None:
            Bipartition.parse(self.bipartition)
        return self

    def analysis_settings(self) -> AnalysisSettings:
        return AnalysisSettings(
            seed=self.seed,
            n_samples=self.n_samples,
            n_pairs=self.n_pairs,
            discord_mode=self.discord_mode,
            discord_restarts=self.discord_restarts,
            discord_grid=self.discord_grid,
            compute_discord=self.compute_discord,
            pcc_mode=self.pcc_mode,
            reduced_subset=self.reduced_slices,
            orthonormal_pairs=self.orthonormal_pairs,
        )


# ---------------------------------------------------------------------------
# Output documents
# ---------------------------------------------------------------------------

class CircuitSummary(BaseModel):
    label: str
    theta: Optional[float] = None
    n_shots: int
    repetitions: int
    seed: int
    exact: bool
    xi_tei_values: list[float]
    xi_tei_mean: float
    xi_tei_std: float


class SpinCoherentReference(BaseModel):
    """Minimum variances of spin coherent states, the squeezing baselines."""

    first_order: dict[int, float]
    second_order: float
    n_samples: int
    n_pairs: int
    seed: int
    orthonormal_pairs: bool


class TomogramAnalysis(BaseModel):
    source: str
    n_qubits: int
    present_slices: list[str]
    indicators: Optional[IndicatorReport] = None
    reduced: Optional[ReducedIndicators] = None
    squeezing: Optional[SqueezingReport] = None
    entropic: list[EntropicSqueezingReport] = Field(default_factory=list)
    unavailable: dict[str, list[str]] = Field(default_factory=dict)
    # inconsistencies that were averaged over instead of failing the analysis
    warnings: list[str] = Field(default_factory=list)


class RunManifest(BaseModel):
    command: str
    config: dict
    seeds: dict[str, int]
    versions: dict[str, str]
    outputs: list[str]
