"""
Spin tomograms over the {x, y, z}^N quorum.

A slice is the outcome distribution for one axis choice per qubit, stored
as a probability vector over the 2^N outcomes in lexicographic order
(outcome bit 0 -> m = -1/2, bit 1 -> m = +1/2, qubit 0 most significant).

Usage:
  tomo = full_tomogram(rho)
  write_tomogram(tomo, Path("output/tomogram.json"))   # also writes tomogram.csv
  tomo = read_tomogram(Path("output/tomogram.json"))
"""
import csv
import itertools
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

import numpy as np
from loguru import logger
from pydantic import (
    BaseModel,
    ConfigDict,
    ValidationError,
    ValidationInfo,
    field_validator,
    model_validator,
)

from app import config, qmath
from app.errors import TomogramDataError
from app.models import AXIS_LABELS, TomogramFile, TomogramSliceRecord

SLICE_SUM_TOL = 1e-9
CLAMP_TOL = 1e-9

AXIS_ANGLES = {
    "x": (np.pi / 2, 0.0),
    "y": (np.pi / 2, np.pi / 2),
    "z": (0.0, 0.0),
}


class Direction(BaseModel):
    """A measurement axis: a named axis or explicit polar angles."""

    model_config = ConfigDict(frozen=True)

    axis: Optional[str] = None
    theta: float = 0.0
    phi: float = 0.0

    @model_validator(mode="before")
    @classmethod
    def _resolve(cls, data):
        axis = data.get("axis") if isinstance(data, dict) else None
        if axis is not None:
            if axis not in AXIS_ANGLES:
                raise ValueError(f"unknown axis label {axis!r}")
            theta, phi = AXIS_ANGLES[axis]
            data = {**data, "theta": theta, "phi": phi}
        return data

    @classmethod
    def from_axis(cls, axis: str) -> "Direction":
        return cls(axis=axis)

    @classmethod
    def from_angles(cls, theta: float, phi: float) -> "Direction":
        return cls(theta=theta, phi=phi)

    @property
    def vector(self) -> np.ndarray:
        return np.array([
            np.sin(self.theta) * np.cos(self.phi),
            np.sin(self.theta) * np.sin(self.phi),
            np.cos(self.theta),
        ])


def rotation_u(theta: float, phi: float) -> np.ndarray:
    """The rotation U(theta, phi); its columns are |n, -1/2> and |n, +1/2>."""
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    ep, em = np.exp(0.5j * phi), np.exp(-0.5j * phi)
    return np.array([[c * ep, s * ep], [-s * em, c * em]], dtype=complex)


def measurement_basis(direction: Direction) -> np.ndarray:
    """Columns ordered (m = -1/2, m = +1/2) for the spin component along n."""
    u = rotation_u(direction.theta, direction.phi)
    n = direction.vector
    n_sigma = n[0] * qmath.SIGMA_X + n[1] * qmath.SIGMA_Y + n[2] * qmath.SIGMA_Z
    first = np.real(u[:, 0].conj() @ n_sigma @ u[:, 0])
    if first > 0:
        u = u[:, ::-1]
    return u


def all_axes(n_qubits: int) -> list[str]:
    return ["".join(p) for p in itertools.product(AXIS_LABELS, repeat=n_qubits)]


def slice_key(axes: Iterable[str]) -> str:
    return axes if isinstance(axes, str) else "".join(axes)


def outcome_values(n_qubits: int) -> np.ndarray:
    """(2^N, N) table of spin values m for every outcome index."""
    bits = np.array(list(itertools.product((0, 1), repeat=n_qubits)), dtype=float)
    return bits - 0.5


def outcome_label(index: int, n_qubits: int) -> str:
    return format(index, f"0{n_qubits}b")


def _clamp(probs: np.ndarray, label: str) -> np.ndarray:
    if probs.min() < -CLAMP_TOL or probs.max() > 1.0 + CLAMP_TOL:
        raise TomogramDataError(
            f"slice {label}: probability outside [0, 1] "
            f"(min {probs.min():.3e}, max {probs.max():.3e})"
        )
    return np.clip(probs, 0.0, 1.0)


class Tomogram(BaseModel):
    """Slices keyed by axis string ("xy"), each a probability vector."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    n_qubits: int
    slices: dict[str, Any]

    @field_validator("n_qubits")
    @classmethod
    def _size(cls, v: int) -> int:
        if not 1 <= v <= 3:
            raise ValueError(f"tomograms support 1 to 3 qubits, got {v}")
        return v

    @field_validator("slices", mode="before")
    @classmethod
    def _check_slices(cls, value, info: ValidationInfo):
        n = info.data.get("n_qubits")
        if n is None:
            raise ValueError("n_qubits missing or invalid")
        tol = (info.context or {}).get("tolerance", SLICE_SUM_TOL)
        out = {}
        for axes, probs in dict(value).items():
            key = slice_key(axes)
            if len(key) != n or any(c not in AXIS_LABELS for c in key):
                raise ValueError(f"slice {key!r}: unknown axis label or wrong length")
            arr = np.asarray(probs, dtype=float).reshape(-1)
            if arr.shape != (2**n,) or not np.all(np.isfinite(arr)):
                raise ValueError(f"slice {key}: expected {2**n} finite probabilities")
            arr = _clamp(arr, key)
            total = arr.sum()
            if abs(total - 1.0) > tol:
                raise ValueError(f"slice {key}: probabilities sum to {total:.9f}")
            out[key] = arr
        if not out:
            raise ValueError("tomogram has no slices")
        return dict(sorted(out.items()))

    @classmethod
    def build(cls, n_qubits: int, slices: dict, tolerance: float = SLICE_SUM_TOL) -> "Tomogram":
        """Construct, reporting validation failures as TomogramDataError."""
        try:
            return cls.model_validate(
                {"n_qubits": n_qubits, "slices": slices}, context={"tolerance": tolerance}
            )
        except ValidationError as exc:
            raise TomogramDataError(str(exc)) from exc

    @property
    def axes(self) -> list[str]:
        return list(self.slices)

    def is_complete(self) -> bool:
        return len(self.slices) == 3**self.n_qubits

    def missing(self, required: Iterable[str]) -> list[str]:
        return [a for a in required if a not in self.slices]

    def probs(self, axes) -> np.ndarray:
        key = slice_key(axes)
        if key not in self.slices:
            raise TomogramDataError(f"slice {key} not present in tomogram")
        return self.slices[key]

    def subset(self, axes: Iterable[str]) -> "Tomogram":
        keys = [slice_key(a) for a in axes]
        missing = self.missing(keys)
        if missing:
            raise TomogramDataError(f"slices not present in tomogram: {', '.join(missing)}")
        return Tomogram(n_qubits=self.n_qubits, slices={k: self.slices[k] for k in keys})


def tomogram_slice(rho, dirs: Sequence) -> np.ndarray:
    """Outcome probabilities <n,m|rho|n,m> for one direction per qubit."""
    m = qmath.as_cmat(rho)
    dirs = [d if isinstance(d, Direction) else Direction.from_axis(d) for d in dirs]
    if m.shape[0] != 2 ** len(dirs):
        raise ValueError(f"{len(dirs)} directions do not match matrix dimension {m.shape[0]}")
    basis = qmath.kron_all([measurement_basis(d) for d in dirs])
    probs = np.real(np.einsum("ji,jk,ki->i", basis.conj(), m, basis))
    return _clamp(probs, "".join(d.axis or "n" for d in dirs))


def full_tomogram(rho, axes: Optional[Iterable[str]] = None) -> Tomogram:
    """All 3^N slices (or the given subset) of a density matrix."""
    m = qmath.as_cmat(rho)
    n = int(round(np.log2(m.shape[0])))
    if not 1 <= n <= 3:
        raise ValueError(f"full tomograms support 1 to 3 qubits, got {n}")
    keys = list(axes) if axes is not None else all_axes(n)
    return Tomogram(n_qubits=n, slices={k: tomogram_slice(m, list(k)) for k in keys})


def reduce_probs(probs: np.ndarray, n_qubits: int, keep: Sequence[int]) -> np.ndarray:
    tensor = probs.reshape([2] * n_qubits)
    dropped = tuple(i for i in range(n_qubits) if i not in keep)
    reduced = tensor.sum(axis=dropped) if dropped else tensor
    # remaining axes are in ascending qubit order; reorder to `keep`
    remaining = sorted(keep)
    reduced = np.transpose(reduced, [remaining.index(k) for k in keep])
    return reduced.reshape(-1)


def marginal(tomogram: Tomogram, keep: Sequence[int], tolerance: Optional[float] = 1e-9) -> Tomogram:
    """Reduced tomogram of the qubits in `keep`.

    Every slice sharing the kept axes must give the same marginal within
    `tolerance`; otherwise the input is reported as inconsistent. With
    `tolerance=None` the marginals are averaged without the check, which
    suits shot-sampled data.
    """
    n = tomogram.n_qubits
    keep = [int(k) for k in keep]
    if not keep or len(set(keep)) != len(keep) or any(not 0 <= k < n for k in keep):
        raise ValueError(f"invalid keep set {keep} for {n} qubits")

    groups: dict[str, list[np.ndarray]] = {}
    for axes, probs in tomogram.slices.items():
        kept_axes = "".join(axes[k] for k in keep)
        groups.setdefault(kept_axes, []).append(reduce_probs(probs, n, keep))

    slices = {}
    for kept_axes, rows in groups.items():
        stack = np.array(rows)
        deviation = float(np.max(np.abs(stack - stack[0]))) if len(rows) > 1 else 0.0
        if tolerance is not None and deviation > tolerance:
            raise TomogramDataError(
                f"marginal {kept_axes} on qubits {keep} inconsistent across slices "
                f"(max deviation {deviation:.3e})"
            )
        slices[kept_axes] = stack.mean(axis=0)
    return Tomogram(n_qubits=len(keep), slices=slices)


def moment(tomogram: Tomogram, factors: Sequence[tuple[int, str]]) -> float:
    """Expectation of a product of half-spin components read off the tomogram.

    Averages over every slice whose axes match on the listed qubits.
    """
    n = tomogram.n_qubits
    qubits = [int(q) for q, _ in factors]
    if len(set(qubits)) != len(qubits):
        raise ValueError("at most one factor per qubit")
    for q, a in factors:
        if not 0 <= int(q) < n or a not in AXIS_LABELS:
            raise ValueError(f"invalid moment factor ({q}, {a!r})")
    if not factors:
        return 1.0

    matching = [
        probs for axes, probs in tomogram.slices.items()
        if all(axes[int(q)] == a for q, a in factors)
    ]
    if not matching:
        wanted = ", ".join(f"{a}{q}" for q, a in factors)
        raise TomogramDataError(f"no slice measures {wanted}")
    weights = np.prod(outcome_values(n)[:, qubits], axis=1)
    return float(np.mean([probs @ weights for probs in matching]))


def write_tomogram(tomogram: Tomogram, path: Path) -> tuple[Path, Path]:
    """Write the JSON document and a flat CSV next to it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = TomogramFile(
        n_qubits=tomogram.n_qubits,
        slices=[
            TomogramSliceRecord(axes=axes, probs=[float(p) for p in probs])
            for axes, probs in tomogram.slices.items()
        ],
    )
    path.write_text(doc.model_dump_json(indent=2) + "\n")

    csv_path = path.with_suffix(".csv")
    with open(csv_path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["axes", "outcome", "probability"])
        for axes, probs in tomogram.slices.items():
            for idx, p in enumerate(probs):
                writer.writerow([axes, outcome_label(idx, tomogram.n_qubits), repr(float(p))])
    logger.debug(f"Wrote tomogram ({len(tomogram.slices)} slices) to {path}")
    return path, csv_path


def read_tomogram(path: Path, tolerance: Optional[float] = None) -> Tomogram:
    """Read a tomogram document; partial tomograms are accepted.

    Raises:
        TomogramDataError: malformed file, unknown axis label, duplicate
            slices or a slice whose sum is off by more than `tolerance`.
    """
    tol = config.NORMALIZATION_TOL if tolerance is None else tolerance
    path = Path(path)
    try:
        doc = TomogramFile.model_validate_json(path.read_text())
    except OSError as exc:
        raise TomogramDataError(f"cannot read tomogram file {path}: {exc}") from exc
    except ValidationError as exc:
        raise TomogramDataError(f"malformed tomogram file {path}: {exc}") from exc

    slices = {}
    for record in doc.slices:
        if record.axes in slices:
            raise TomogramDataError(f"slice {record.axes} appears twice in {path}")
        if len(record.axes) != doc.n_qubits:
            raise TomogramDataError(f"slice {record.axes} does not have {doc.n_qubits} axes")
        total = sum(record.probs)
        if abs(total - 1.0) > tol:
            raise TomogramDataError(
                f"slice {record.axes}: probabilities sum to {total:.9f} (tolerance {tol:g})"
            )
        slices[record.axes] = record.probs
    return Tomogram.build(doc.n_qubits, slices, tolerance=tol)
