"""
Tomographic entanglement indicators.

Per slice, with w the joint outcome distribution across a bipartition and
w_A, w_B its marginals:
  eps_tei  mutual information S(w_A) + S(w_B) - S(w)            (bits)
  eps_ipr  1 + eta(w) - eta(w_A) - eta(w_B), eta = sum p^2
  eps_pcc  |Pearson correlation| of the spin values on each side
  eps_bd   Bhattacharyya distance between w and w_A w_B          (bits)
The xi_* values are slice averages.
"""
import itertools
from typing import Iterable, Optional, Sequence

import numpy as np
from loguru import logger

from app import config
from app.errors import ConfigError, TomogramDataError
from app.models import (
    AXIS_LABELS,
    Bipartition,
    IndicatorReport,
    ReducedIndicators,
    SliceIndicators,
)
from app.tomography import Tomogram, outcome_values, reduce_probs

MARGINAL_TOL = 1e-9
ZERO_STD = 1e-12
SPIN_VALUES = np.array([-0.5, 0.5])


def slice_entropy(probs) -> float:
    """Shannon entropy in bits, with 0 log 0 = 0."""
    p = np.asarray(probs, dtype=float).reshape(-1)
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def eta(probs) -> float:
    """Inverse participation ratio sum p^2."""
    p = np.asarray(probs, dtype=float)
    return float(np.sum(p * p))


def kl_divergence(p, q) -> float:
    """D_KL(p || q) in bits."""
    p = np.asarray(p, dtype=float).reshape(-1)
    q = np.asarray(q, dtype=float).reshape(-1)
    support = p > 0
    if np.any(q[support] <= 0):
        raise TomogramDataError("reference distribution vanishes where the joint does not")
    return float(np.sum(p[support] * np.log2(p[support] / q[support])))


def bhattacharyya_coefficient(p, q) -> float:
    p = np.asarray(p, dtype=float).reshape(-1)
    q = np.asarray(q, dtype=float).reshape(-1)
    return float(np.sum(np.sqrt(p * q)))


def _joint_matrix(joint, marginal_a, marginal_b) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    a = np.asarray(marginal_a, dtype=float).reshape(-1)
    b = np.asarray(marginal_b, dtype=float).reshape(-1)
    w = np.asarray(joint, dtype=float).reshape(a.size, b.size)
    deviation = max(np.max(np.abs(w.sum(axis=1) - a)), np.max(np.abs(w.sum(axis=0) - b)))
    if deviation > MARGINAL_TOL:
        raise TomogramDataError(f"marginals inconsistent with joint (deviation {deviation:.3e})")
    return w, a, b


def eps_tei(joint, marginal_a, marginal_b) -> float:
    w, a, b = _joint_matrix(joint, marginal_a, marginal_b)
    return slice_entropy(a) + slice_entropy(b) - slice_entropy(w)


def eps_tei_kl(joint, marginal_a, marginal_b) -> float:
    """eps_tei in its relative-entropy form D_KL(w || w_A w_B)."""
    w, a, b = _joint_matrix(joint, marginal_a, marginal_b)
    return kl_divergence(w, np.outer(a, b))


def eps_ipr(joint, marginal_a, marginal_b) -> float:
    w, a, b = _joint_matrix(joint, marginal_a, marginal_b)
    return 1.0 + eta(w) - eta(a) - eta(b)


def eps_bd(joint, marginal_a, marginal_b) -> float:
    w, a, b = _joint_matrix(joint, marginal_a, marginal_b)
    coefficient = bhattacharyya_coefficient(w, np.outer(a, b))
    return max(0.0, float(-np.log2(coefficient)))


def eps_pcc(joint, values_a=None, values_b=None) -> float:
    """|Pearson correlation| of the side values; 0 when a side is deterministic.

    Without explicit values the joint must be a 2x2 (or length-4) single
    qubit pair with spin values -1/2, +1/2.
    """
    va = SPIN_VALUES if values_a is None else np.asarray(values_a, dtype=float)
    vb = SPIN_VALUES if values_b is None else np.asarray(values_b, dtype=float)
    w = np.asarray(joint, dtype=float).reshape(va.size, vb.size)
    a, b = w.sum(axis=1), w.sum(axis=0)
    mean_a, mean_b = a @ va, b @ vb
    std_a = np.sqrt(max(a @ va**2 - mean_a**2, 0.0))
    std_b = np.sqrt(max(b @ vb**2 - mean_b**2, 0.0))
    if std_a < ZERO_STD or std_b < ZERO_STD:
        logger.debug("PCC undefined for a deterministic side; using 0")
        return 0.0
    cov = va @ w @ vb - mean_a * mean_b
    return float(min(abs(cov) / (std_a * std_b), 1.0))


def side_values(n_side: int) -> np.ndarray:
    """Collective spin value sum(m_i) for each composite outcome of a side."""
    return outcome_values(n_side).sum(axis=1)


def split_slice(probs: np.ndarray, n_qubits: int, bipartition: Bipartition) -> np.ndarray:
    """Joint outcome matrix (rows: side A outcomes, columns: side B outcomes)."""
    keep = list(bipartition.side_a) + list(bipartition.side_b)
    reduced = reduce_probs(np.asarray(probs, dtype=float), n_qubits, keep)
    return reduced.reshape(2 ** len(bipartition.side_a), 2 ** len(bipartition.side_b))


def _pcc_max(probs: np.ndarray, n_qubits: int, bipartition: Bipartition) -> float:
    best = 0.0
    for qa, qb in itertools.product(bipartition.side_a, bipartition.side_b):
        pair = reduce_probs(np.asarray(probs, dtype=float), n_qubits, [qa, qb])
        best = max(best, eps_pcc(pair))
    return best


def slice_indicators(
    axes: str,
    probs,
    n_qubits: int,
    bipartition: Bipartition,
    pcc_mode: str = "collective",
) -> SliceIndicators:
    w = split_slice(probs, n_qubits, bipartition)
    a, b = w.sum(axis=1), w.sum(axis=0)
    if pcc_mode == "max":
        pcc = _pcc_max(probs, n_qubits, bipartition)
    else:
        pcc = eps_pcc(w, side_values(len(bipartition.side_a)), side_values(len(bipartition.side_b)))
    return SliceIndicators(
        axes=axes,
        eps_tei=eps_tei(w, a, b),
        eps_ipr=eps_ipr(w, a, b),
        eps_pcc=pcc,
        eps_bd=eps_bd(w, a, b),
    )


def default_reduced_subset(n_qubits: int) -> list[str]:
    """Slices whose first axis is x or y; for two qubits xx, xy, xz, yx, yy, yz."""
    return ["".join(p) for p in itertools.product("xy", *([AXIS_LABELS] * (n_qubits - 1)))]


def _mean(rows: Sequence[SliceIndicators], field: str) -> float:
    return float(np.mean([getattr(r, field) for r in rows]))


def _check_subset(tomogram: Tomogram, subset: Iterable[str], what: str) -> list[str]:
    subset = list(subset)
    if not subset:
        raise ConfigError(f"{what} slice subset is empty")
    missing = tomogram.missing(subset)
    if missing:
        raise TomogramDataError(f"{what} slices not present in tomogram: {', '.join(missing)}")
    return subset


def average_indicators(
    tomogram: Tomogram,
    bipartition: Bipartition,
    slice_subset: Optional[Iterable[str]] = None,
    reduced_subset: Optional[Iterable[str]] = None,
    pcc_mode: Optional[str] = None,
) -> IndicatorReport:
    """Per-slice indicators and their averages over the included slices.

    `slice_subset` defaults to every slice present in the tomogram. When
    `reduced_subset` is given, averages over that subset are added as the
    reduced report.
    """
    mode = pcc_mode or config.PCC_MODE
    if mode not in ("collective", "max"):
        raise ConfigError(f"unknown PCC mode {mode!r} (expected 'collective' or 'max')")
    try:
        bipartition.check_register(tomogram.n_qubits)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    included = _check_subset(
        tomogram, tomogram.axes if slice_subset is None else slice_subset, "requested"
    )
    per_slice = {
        axes: slice_indicators(axes, tomogram.slices[axes], tomogram.n_qubits, bipartition, mode)
        for axes in included
    }
    rows = list(per_slice.values())

    reduced = None
    if reduced_subset is not None:
        subset = _check_subset(tomogram, reduced_subset, "reduced")
        reduced_rows = [
            per_slice.get(axes)
            or slice_indicators(axes, tomogram.slices[axes], tomogram.n_qubits, bipartition, mode)
            for axes in subset
        ]
        reduced = ReducedIndicators(
            subset=subset,
            xi_tei=_mean(reduced_rows, "eps_tei"),
            xi_ipr=_mean(reduced_rows, "eps_ipr"),
            xi_pcc=_mean(reduced_rows, "eps_pcc"),
            xi_bd=_mean(reduced_rows, "eps_bd"),
        )

    return IndicatorReport(
        bipartition=bipartition,
        pcc_mode=mode,
        slices=rows,
        included=included,
        complete=len(set(included)) == 3**tomogram.n_qubits,
        xi_tei=_mean(rows, "eps_tei"),
        xi_ipr=_mean(rows, "eps_ipr"),
        xi_pcc=_mean(rows, "eps_pcc"),
        xi_bd=_mean(rows, "eps_bd"),
        reduced=reduced,
    )
