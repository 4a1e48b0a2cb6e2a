"""
First- and second-order spin squeezing, from density matrices or tomograms.

Every quantity is computed through an expectation source:
  DensityExpectation(rho)         <O> = Tr(rho O)
  TomographicExpectation(tomo)    <O> from tomographic moments only, after
                                  expanding O in half-spin strings
so the two routes run the same code and can be compared directly.

First order: minimum of Var(J.v) over unit v perpendicular to the mean spin
direction (any v when the mean spin vanishes); extent 1 - (4/N) var_min.
Second order (two qubits): minimum of Var(cal J) over orthonormal pairs
(v1, v2) with <cal J> = 0, cal J = (1/2)(v1.JJ.v2 + v2.JJ.v1);
extent 1 - 8 var_min.
"""
import functools
import itertools
from typing import NamedTuple, Optional, Union

import numpy as np
from loguru import logger
from scipy.optimize import minimize
from scipy.spatial.transform import Rotation

from app import config, qmath
from app.errors import TomogramDataError
from app.models import (
    EntropicSqueezingReport,
    FirstOrderResult,
    SecondOrderResult,
    SqueezingReport,
)
from app.indicators import slice_entropy
from app.states import spin_coherent
from app.tomography import Tomogram, all_axes, marginal, moment

NULL_SPIN_TOL = 1e-9
DEGENERATE_TOL = 1e-6
REFINE_STARTS = 3
NELDER_MEAD_OPTIONS = {"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000}


class CollectiveSpin(NamedTuple):
    n_qubits: int
    jx: np.ndarray
    jy: np.ndarray
    jz: np.ndarray

    @property
    def components(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.jx, self.jy, self.jz


@functools.lru_cache(maxsize=None)
def collective_spin(n_qubits: int) -> CollectiveSpin:
    """J_a = sum_i sigma_a^(i) with half-spin sigma."""
    ops = [
        sum(qmath.embed(op, i, n_qubits) for i in range(n_qubits))
        for op in (qmath.SIGMA_X, qmath.SIGMA_Y, qmath.SIGMA_Z)
    ]
    return CollectiveSpin(n_qubits, *ops)


@functools.lru_cache(maxsize=None)
def _spin_strings(n_qubits: int) -> tuple[list[str], np.ndarray, np.ndarray]:
    """All products of {I, sigma_x, sigma_y, sigma_z} with their Tr(S^2)."""
    single = {"i": qmath.IDENTITY2, **qmath.AXIS_OPERATORS}
    labels = ["".join(p) for p in itertools.product("ixyz", repeat=n_qubits)]
    mats = np.array([qmath.kron_all([single[c] for c in label]) for label in labels])
    norms = np.array([np.prod([2.0 if c == "i" else 0.5 for c in label]) for label in labels])
    return labels, mats, norms


class DensityExpectation:
    """Expectation values straight from a density matrix."""

    source = "density"

    def __init__(self, rho):
        self.matrix = qmath.as_cmat(rho)
        self.n_qubits = int(round(np.log2(self.matrix.shape[0])))

    def expect(self, op: np.ndarray) -> float:
        return float(np.real(np.trace(self.matrix @ op)))


class TomographicExpectation:
    """Expectation values assembled from tomogram moments only."""

    source = "tomogram"

    def __init__(self, tomogram: Tomogram):
        self.tomogram = tomogram
        self.n_qubits = tomogram.n_qubits
        labels, self._strings, self._norms = _spin_strings(self.n_qubits)
        self._moments = np.array([
            moment(tomogram, [(q, a) for q, a in enumerate(label) if a != "i"])
            for label in labels
        ])

    def expect(self, op: np.ndarray) -> float:
        coefficients = np.einsum("sij,ji->s", self._strings, op) / self._norms
        return float(np.real(coefficients @ self._moments))


Source = Union[DensityExpectation, TomographicExpectation]


def as_source(state) -> Source:
    if isinstance(state, (DensityExpectation, TomographicExpectation)):
        return state
    if isinstance(state, Tomogram):
        return TomographicExpectation(state)
    return DensityExpectation(state)


class SpinMoments(NamedTuple):
    """First moments m_a, symmetrized second moments T_ab and, for two
    qubits, Q[(ab),(cd)] = <1/2 {K_ab, K_cd}> with K_ab = 1/2 {J_a, J_b}."""

    n_qubits: int
    mean: np.ndarray
    second: np.ndarray
    fourth: Optional[np.ndarray]

    @classmethod
    def from_source(cls, source: Source, with_fourth: bool = False) -> "SpinMoments":
        spin = collective_spin(source.n_qubits)
        j = spin.components
        mean = np.array([source.expect(op) for op in j])
        k = [0.5 * (j[a] @ j[b] + j[b] @ j[a]) for a in range(3) for b in range(3)]
        second = np.array([source.expect(op) for op in k]).reshape(3, 3)
        fourth = None
        if with_fourth:
            fourth = np.empty((9, 9))
            for p in range(9):
                for q in range(p, 9):
                    value = source.expect(0.5 * (k[p] @ k[q] + k[q] @ k[p]))
                    fourth[p, q] = fourth[q, p] = value
        return cls(source.n_qubits, mean, 0.5 * (second + second.T), fourth)

    @property
    def covariance(self) -> np.ndarray:
        return self.second - np.outer(self.mean, self.mean)


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def _plane_basis(n: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal e1, e2 spanning the plane perpendicular to unit n."""
    helper = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = _unit(helper - (helper @ n) * n)
    return e1, np.cross(n, e1)


def _sphere_point(angles) -> np.ndarray:
    theta, phi = angles[0], angles[1]
    return np.array([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)])


def _sphere_angles(v: np.ndarray) -> np.ndarray:
    return np.array([np.arccos(np.clip(v[2], -1.0, 1.0)), np.arctan2(v[1], v[0])])


def fibonacci_sphere(n_points: int, seed: int) -> np.ndarray:
    """Golden-angle lattice on the unit sphere, rigidly rotated by a seeded rotation."""
    golden = (1 + 5**0.5) / 2
    i = np.arange(n_points)
    azimuth = 2 * np.pi * i / golden
    polar = np.arccos(1 - 2 * (i + 0.5) / n_points)
    points = np.column_stack([
        np.sin(polar) * np.cos(azimuth),
        np.sin(polar) * np.sin(azimuth),
        np.cos(polar),
    ])
    quat = np.random.default_rng([seed, 0]).normal(size=4)
    return Rotation.from_quat(quat / np.linalg.norm(quat)).apply(points)


def mean_spin_direction(state) -> Optional[np.ndarray]:
    """<J>/|<J>|, or None when |<J>| < 1e-9."""
    source = as_source(state)
    spin = collective_spin(source.n_qubits)
    mean = np.array([source.expect(op) for op in spin.components])
    norm = np.linalg.norm(mean)
    if norm < NULL_SPIN_TOL:
        return None
    return mean / norm


def _exact_first_order(moments: SpinMoments, direction: Optional[np.ndarray]) -> float:
    cov = moments.covariance
    if direction is None:
        return float(qmath.herm_eig(cov).eigenvalues[0])
    e1, e2 = _plane_basis(direction)
    basis = np.column_stack([e1, e2])
    return float(qmath.herm_eig(basis.T @ cov @ basis).eigenvalues[0])


def min_variance_first_order(
    state,
    n_samples: int = config.DIRECTION_SAMPLES,
    seed: int = config.DEFAULT_SEED,
    refine: bool = True,
    moments: Optional[SpinMoments] = None,
) -> FirstOrderResult:
    """Minimum variance of J.v over sampled unit vectors v.

    Fibonacci-sphere directions when the mean spin vanishes, evenly spaced
    angles with a seeded offset on the perpendicular great circle otherwise.
    The exact minimum (smallest covariance eigenvalue in the admissible
    subspace) is reported alongside.
    """
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    source = as_source(state)
    moments = moments or SpinMoments.from_source(source)
    cov = moments.covariance
    norm = np.linalg.norm(moments.mean)
    direction = None if norm < NULL_SPIN_TOL else moments.mean / norm

    if direction is None:
        vectors = fibonacci_sphere(n_samples, seed)

        def to_vector(x):
            return _sphere_point(x)

        starts_of = _sphere_angles
    else:
        e1, e2 = _plane_basis(direction)
        offset = np.random.default_rng([seed, 0]).random()
        angles = 2 * np.pi * (np.arange(n_samples) + offset) / n_samples
        vectors = np.outer(np.cos(angles), e1) + np.outer(np.sin(angles), e2)

        def to_vector(x):
            return np.cos(x[0]) * e1 + np.sin(x[0]) * e2

        def starts_of(v):
            return np.array([np.arctan2(v @ e2, v @ e1)])

    variances = np.einsum("ki,ij,kj->k", vectors, cov, vectors)
    order = np.argsort(variances)
    sampled = float(variances[order[0]])
    best_var, best_vec = sampled, vectors[order[0]]

    if refine:
        def objective(x):
            v = to_vector(x)
            return float(v @ cov @ v)

        for idx in order[:REFINE_STARTS]:
            res = minimize(objective, starts_of(vectors[idx]), method="Nelder-Mead",
                           options=NELDER_MEAD_OPTIONS)
            if res.fun < best_var:
                best_var, best_vec = float(res.fun), to_vector(res.x)

    return FirstOrderResult(
        var_min=best_var,
        direction=[float(c) for c in best_vec],
        var_min_sampled=sampled,
        var_min_exact=_exact_first_order(moments, direction),
        mean_spin_direction=None if direction is None else [float(c) for c in direction],
        n_samples=n_samples,
        seed=seed,
    )


def cal_j_operator(n_qubits: int, v1, v2) -> np.ndarray:
    """(1/2)(v1.JJ.v2 + v2.JJ.v1) as a matrix."""
    j = collective_spin(n_qubits).components
    a = sum(c * op for c, op in zip(v1, j))
    b = sum(c * op for c, op in zip(v2, j))
    return 0.5 * (a @ b + b @ a)


def cal_j_expectation(state, v1, v2) -> float:
    source = as_source(state)
    return source.expect(cal_j_operator(source.n_qubits, np.asarray(v1), np.asarray(v2)))


def _pair_partner(v1: np.ndarray, second: np.ndarray, gamma: float, orthonormal: bool) -> np.ndarray:
    """v2 with v2 . (T v1) = 0 (and v2 . v1 = 0 for orthonormal pairs)."""
    w = second @ v1
    w_norm = np.linalg.norm(w)
    if w_norm < 1e-12:
        e1, e2 = _plane_basis(v1)
        return np.cos(gamma) * e1 + np.sin(gamma) * e2

    w_hat = w / w_norm
    if orthonormal:
        u = np.cross(v1, w_hat)
        if np.linalg.norm(u) > DEGENERATE_TOL:
            v2 = u - (u @ w_hat) * w_hat
            return _unit(v2)
        logger.debug("T.v1 parallel to v1; choosing v2 on the perpendicular circle")
    e1, e2 = _plane_basis(w_hat)
    return np.cos(gamma) * e1 + np.sin(gamma) * e2


def _pair_from_normal(normal: np.ndarray, second: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal v1, v2 perpendicular to `normal` with v1.T.v2 = 0."""
    e1, e2 = _plane_basis(normal)
    m = np.real(np.array([[e1 @ second @ e1, e1 @ second @ e2], [e2 @ second @ e1, e2 @ second @ e2]]))
    # principal axes of the symmetric 2x2 restriction of T
    angle = 0.5 * np.arctan2(m[0, 1] + m[1, 0], m[0, 0] - m[1, 1])
    c, s = np.cos(angle), np.sin(angle)
    return _unit(c * e1 + s * e2), _unit(c * e2 - s * e1)


def _second_order_variance(moments: SpinMoments, v1: np.ndarray, v2: np.ndarray) -> tuple[float, float]:
    s = 0.5 * (np.outer(v1, v2) + np.outer(v2, v1))
    mean = float(v1 @ moments.second @ v2)
    flat = s.reshape(-1)
    return float(flat @ moments.fourth @ flat - mean**2), mean


def min_variance_second_order(
    state,
    n_pairs: int = config.PAIR_SAMPLES,
    seed: int = config.DEFAULT_SEED,
    refine: bool = True,
    orthonormal_pairs: bool = True,
    moments: Optional[SpinMoments] = None,
) -> SecondOrderResult:
    """Minimum variance of cal J over sampled pairs with <cal J> = 0.

    v1 runs over a seeded Fibonacci lattice; v2 is fixed by v1 (orthonormal
    pairs) or drawn on the circle perpendicular to T.v1 from a per-pair
    stream seeded by (seed, pair index).
    """
    source = as_source(state)
    if source.n_qubits != 2:
        raise ValueError("second-order squeezing is defined for two qubits")
    if moments is None or moments.fourth is None:
        moments = SpinMoments.from_source(source, with_fourth=True)

    firsts = fibonacci_sphere(n_pairs, seed)
    results = []
    max_constraint = 0.0
    for k, v1 in enumerate(firsts):
        gamma = np.random.default_rng([seed, k + 1]).uniform(0.0, 2 * np.pi)
        v2 = _pair_partner(v1, moments.second, gamma, orthonormal_pairs)
        var, mean = _second_order_variance(moments, v1, v2)
        max_constraint = max(max_constraint, abs(mean))
        results.append((var, v1, v2, gamma))
    results.sort(key=lambda item: item[0])
    sampled, best_v1, best_v2, _ = results[0]
    best_var = sampled

    if refine:
        if orthonormal_pairs:
            # an orthonormal admissible pair is fixed by its normal v1 x v2
            def pair_of(x):
                return _pair_from_normal(_sphere_point(x), moments.second)

            starts = [_sphere_angles(_unit(np.cross(v1, v2))) for _, v1, v2, _ in results[:REFINE_STARTS]]
        else:
            def pair_of(x):
                v1 = _sphere_point(x)
                return v1, _pair_partner(v1, moments.second, x[2], False)

            starts = [np.append(_sphere_angles(v1), g) for _, v1, _, g in results[:REFINE_STARTS]]

        def objective(x):
            return _second_order_variance(moments, *pair_of(x))[0]

        for start in starts:
            res = minimize(objective, start, method="Nelder-Mead", options=NELDER_MEAD_OPTIONS)
            if res.fun < best_var:
                best_var = float(res.fun)
                best_v1, best_v2 = pair_of(res.x)

    return SecondOrderResult(
        var_min=best_var,
        pair=([float(c) for c in best_v1], [float(c) for c in best_v2]),
        var_min_sampled=sampled,
        max_abs_constraint=max_constraint,
        n_pairs=n_pairs,
        seed=seed,
        orthonormal_pairs=orthonormal_pairs,
    )


def _coherent_grid(grid: tuple[int, int]):
    for theta in np.linspace(0.0, np.pi, grid[0]):
        for phi in np.linspace(0.0, 2 * np.pi, grid[1], endpoint=False):
            yield theta, phi


def first_order_reference(
    n_qubits: int,
    n_samples: int = config.DIRECTION_SAMPLES,
    seed: int = config.DEFAULT_SEED,
    grid: tuple[int, int] = (5, 8),
) -> float:
    """First-order minimum for N-qubit spin coherent states (N/4 in theory)."""
    best = np.inf
    for theta, phi in _coherent_grid(grid):
        rho = spin_coherent(theta, phi, n_qubits).projector()
        best = min(best, min_variance_first_order(rho, n_samples, seed).var_min)
    return float(best)


def second_order_reference(
    n_pairs: int = config.PAIR_SAMPLES,
    seed: int = config.DEFAULT_SEED,
    grid: tuple[int, int] = (5, 8),
    orthonormal_pairs: bool = True,
) -> float:
    """Second-order minimum for two-qubit spin coherent states, minimized over (theta, phi)."""
    best = np.inf
    for theta, phi in _coherent_grid(grid):
        rho = spin_coherent(theta, phi, 2).projector()
        result = min_variance_second_order(rho, n_pairs, seed, orthonormal_pairs=orthonormal_pairs)
        best = min(best, result.var_min)
    return float(best)


def squeezing_report(
    state,
    t: Optional[float] = None,
    n_samples: int = config.DIRECTION_SAMPLES,
    n_pairs: int = config.PAIR_SAMPLES,
    seed: int = config.DEFAULT_SEED,
    refine: bool = True,
    orthonormal_pairs: bool = True,
) -> SqueezingReport:
    """First-order results for any N; second-order results added for N = 2."""
    source = as_source(state)
    n = source.n_qubits
    moments = SpinMoments.from_source(source, with_fourth=(n == 2))
    first = min_variance_first_order(source, n_samples, seed, refine, moments)

    report = {
        "t": t,
        "n_qubits": n,
        "source": source.source,
        "mean_spin_direction": first.mean_spin_direction,
        "var_min_1": first.var_min,
        "var_min_1_sampled": first.var_min_sampled,
        "var_min_1_exact": first.var_min_exact,
        "extent_1": 1.0 - (4.0 / n) * first.var_min,
        "direction_1": first.direction,
        "n_samples": n_samples,
    }
    if n == 2:
        second = min_variance_second_order(source, n_pairs, seed, refine, orthonormal_pairs, moments)
        report.update(
            var_min_2=second.var_min,
            var_min_2_sampled=second.var_min_sampled,
            extent_2=1.0 - 8.0 * second.var_min,
            pair_2=second.pair,
            n_pairs=n_pairs,
        )
    return SqueezingReport(**report)


def squeezing_from_tomogram(tomogram: Tomogram, **kwargs) -> SqueezingReport:
    """Squeezing quantities using only tomographic moments (needs all 3^N slices)."""
    missing = tomogram.missing(all_axes(tomogram.n_qubits))
    if missing:
        raise TomogramDataError(f"squeezing needs every slice; missing {', '.join(missing)}")
    return squeezing_report(TomographicExpectation(tomogram), **kwargs)


def entropic_squeezing_check(
    tomogram: Tomogram,
    qubit: int,
    threshold: Optional[float] = None,
    tolerance: Optional[float] = 1e-6,
) -> EntropicSqueezingReport:
    """Single-qubit tomographic entropies per axis; axes below `threshold` bits are flagged.

    The default threshold is half the 1-bit entropic uncertainty bound.
    `tolerance=None` averages inconsistent marginals instead of raising.
    """
    threshold = config.ENTROPIC_THRESHOLD if threshold is None else threshold
    reduced = marginal(tomogram, [qubit], tolerance=tolerance)
    missing = reduced.missing("xyz")
    if missing:
        raise TomogramDataError(f"qubit {qubit} not measured along {', '.join(missing)}")
    entropies = {axis: slice_entropy(reduced.slices[axis]) for axis in "xyz"}
    return EntropicSqueezingReport(
        qubit=qubit,
        entropies=entropies,
        threshold=threshold,
        squeezed_axes=[axis for axis, s in entropies.items() if s < threshold],
    )
