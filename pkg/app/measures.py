"""
Density-matrix measures: von Neumann entropy, quantum mutual information,
negativity and quantum discord.

Discord convention: discord(rho, measured=...) returns D(X:Y) where Y is the
measured group of qubits,

    D = S(rho_Y) - S(rho_XY) + min_{Pi} sum_j p_j S(rho_X|j),

the minimum running over rank-1 projective measurements {Pi_j} on Y.
"""
from typing import Optional, Sequence

import numpy as np
from loguru import logger
from scipy.optimize import minimize

from app import config, qmath
from app.models import Bipartition, DiscordResult
from app.tomography import rotation_u

EIG_FLOOR = 1e-15
SPREAD_TOL = 1e-3
NELDER_MEAD_OPTIONS = {"xatol": 1e-7, "fatol": 1e-12, "maxiter": 4000}
GIVENS_PAIRS = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]


def _n_qubits(rho: np.ndarray) -> int:
    n = int(round(np.log2(rho.shape[0])))
    if 2**n != rho.shape[0]:
        raise ValueError(f"dimension {rho.shape[0]} is not a power of two")
    return n


def entropy_of_spectrum(eigenvalues) -> float:
    lam = np.clip(np.asarray(eigenvalues, dtype=float), 0.0, None)
    lam = lam[lam > EIG_FLOOR]
    return float(-np.sum(lam * np.log2(lam)))


def svne(rho) -> float:
    """von Neumann entropy in bits."""
    return entropy_of_spectrum(qmath.herm_eigvalsh(rho))


def _reduce(rho: np.ndarray, qubits: Sequence[int]) -> np.ndarray:
    n = _n_qubits(rho)
    if sorted(qubits) == list(range(n)) and list(qubits) == list(range(n)):
        return rho
    return qmath.partial_trace(rho, [2] * n, list(qubits))


def qmi(rho, bipartition: Bipartition) -> float:
    """S_A + S_B - S_AB."""
    m = qmath.as_cmat(rho)
    bipartition.check_register(_n_qubits(m))
    s_a = svne(_reduce(m, bipartition.side_a))
    s_b = svne(_reduce(m, bipartition.side_b))
    s_ab = svne(_reduce(m, bipartition.qubits))
    return s_a + s_b - s_ab


def negativity(rho, bipartition: Bipartition, transpose_side: str = "a") -> float:
    """Sum of |negative eigenvalues| of the partial transpose."""
    m = qmath.as_cmat(rho)
    bipartition.check_register(_n_qubits(m))
    joint = _reduce(m, bipartition.qubits)
    n_a = len(bipartition.side_a)
    side = list(range(n_a)) if transpose_side == "a" else list(range(n_a, len(bipartition.qubits)))
    pt = qmath.partial_transpose(joint, [2] * len(bipartition.qubits), side)
    lam = qmath.herm_eigvalsh(pt)
    return float(0.5 * np.sum(np.abs(lam) - lam))


# ---------------------------------------------------------------------------
# Discord
# ---------------------------------------------------------------------------

def conditional_entropy(rho_my: np.ndarray, basis: np.ndarray, dim_measured: int) -> float:
    """sum_j p_j S(rho_X|j) for a measurement in the orthonormal columns of `basis`.

    `rho_my` is ordered (measured, unmeasured).
    """
    dim_other = rho_my.shape[0] // dim_measured
    tensor = rho_my.reshape(dim_measured, dim_other, dim_measured, dim_other)
    blocks = np.einsum("aj,aibk,bj->jik", basis.conj(), tensor, basis)
    total = 0.0
    for block in blocks:
        p = float(np.real(np.trace(block)))
        if p <= EIG_FLOOR:
            continue
        lam = qmath.herm_eigvalsh(0.5 * (block + block.conj().T))
        total += entropy_of_spectrum(lam) + p * np.log2(p)
    return total


def _grid_conditional_entropies(rho_my: np.ndarray, thetas: np.ndarray, phis: np.ndarray) -> np.ndarray:
    """conditional_entropy for a batch of single-qubit bases U(theta, phi).

    Only for one measured qubit and one unmeasured qubit, where every
    conditional block is 2x2 and its spectrum has a closed form.
    """
    c, s = np.cos(thetas / 2), np.sin(thetas / 2)
    ep, em = np.exp(0.5j * phis), np.exp(-0.5j * phis)
    u = np.empty((thetas.size, 2, 2), dtype=complex)
    u[:, 0, 0], u[:, 0, 1] = c * ep, s * ep
    u[:, 1, 0], u[:, 1, 1] = -s * em, c * em
    tensor = rho_my.reshape(2, 2, 2, 2)
    blocks = np.einsum("kaj,aibl,kbj->kjil", u.conj(), tensor, u)
    b00, b11 = blocks[..., 0, 0].real, blocks[..., 1, 1].real
    p = b00 + b11
    radius = np.hypot(0.5 * (b00 - b11), np.abs(0.5 * (blocks[..., 0, 1] + blocks[..., 1, 0].conj())))
    lam = np.stack([0.5 * p - radius, 0.5 * p + radius], axis=-1)
    lam = np.clip(lam, 0.0, None)
    with np.errstate(divide="ignore", invalid="ignore"):
        lam_terms = np.where(lam > EIG_FLOOR, lam * np.log2(lam), 0.0)
        p_terms = np.where(p > EIG_FLOOR, p * np.log2(p), 0.0)
    # blocks below the floor drop out entirely, as in conditional_entropy
    lam_terms = np.where((p > EIG_FLOOR)[..., None], lam_terms, 0.0)
    return np.sum(p_terms - lam_terms.sum(axis=-1), axis=-1)


def givens_unitary(params: np.ndarray) -> np.ndarray:
    """4x4 unitary from 6 complex Givens rotations (angle, phase per pair)."""
    u = np.eye(4, dtype=complex)
    for k, (p, q) in enumerate(GIVENS_PAIRS):
        angle, phase = params[2 * k], params[2 * k + 1]
        g = np.eye(4, dtype=complex)
        c, s = np.cos(angle), np.sin(angle)
        g[p, p] = c
        g[q, q] = c
        g[p, q] = -np.exp(-1j * phase) * s
        g[q, p] = np.exp(1j * phase) * s
        u = u @ g
    return u


def product_unitary(params: np.ndarray) -> np.ndarray:
    return np.kron(rotation_u(params[0], params[1]), rotation_u(params[2], params[3]))


def _coordinate_descent(objective, x0: np.ndarray, step: float = 0.5, min_step: float = 1e-6,
                        max_evals: int = 20000) -> tuple[np.ndarray, float]:
    x = np.array(x0, dtype=float)
    best = objective(x)
    evals = 1
    while step >= min_step and evals < max_evals:
        improved = False
        for k in range(x.size):
            for delta in (step, -step):
                trial = x.copy()
                trial[k] += delta
                value = objective(trial)
                evals += 1
                if value < best:
                    x, best, improved = trial, value, True
                    break
        if not improved:
            step *= 0.5
    return x, best


def _minimize_single(objective, grid: int, warm_start: Optional[Sequence[float]] = None,
                     batch=None):
    thetas, phis = np.meshgrid(
        np.linspace(0.0, np.pi, grid), np.linspace(0.0, np.pi, grid, endpoint=False), indexing="ij"
    )
    thetas, phis = thetas.ravel(), phis.ravel()
    if batch is not None:
        scores = batch(thetas, phis)
    else:
        scores = np.array([objective(np.array([t, p])) for t, p in zip(thetas, phis)])
    order = np.argsort(scores, kind="stable")
    starts = [np.array([thetas[k], phis[k]]) for k in order[:3]]
    if warm_start is not None:
        # previous optimum plus the two best grid points
        starts = [np.asarray(warm_start, dtype=float)] + starts[:2]
    best_x, values = None, []
    for start in starts:
        res = minimize(objective, start, method="Nelder-Mead", options=NELDER_MEAD_OPTIONS)
        values.append(float(res.fun))
        if best_x is None or res.fun <= min(values):
            best_x = np.asarray(res.x)
    return best_x, values


def _minimize_restarts(objective, n_params: int, restarts: int, seed: int,
                       warm_start: Optional[Sequence[float]] = None):
    best_x, values = None, []
    for r in range(restarts):
        if r == 0 and warm_start is not None and len(warm_start) == n_params:
            x0 = np.asarray(warm_start, dtype=float)
        else:
            x0 = np.random.default_rng([seed, r]).uniform(0.0, 2 * np.pi, n_params)
        x, value = _coordinate_descent(objective, x0)
        values.append(float(value))
        if best_x is None or value <= min(values):
            best_x = x
    return best_x, values


def discord(
    rho,
    measured: Sequence[int],
    unmeasured: Optional[Sequence[int]] = None,
    mode: str = "full",
    seed: int = config.DEFAULT_SEED,
    restarts: int = config.DISCORD_RESTARTS,
    grid: int = config.DISCORD_GRID,
    warm_start: Optional[Sequence[float]] = None,
) -> DiscordResult:
    """Quantum discord with projective measurements on the `measured` qubits.

    One measured qubit: grid search over U(theta, phi) followed by
    Nelder-Mead from the best three grid points. Two measured qubits: either
    a general orthonormal basis (mode "full", 6 complex Givens rotations) or
    a local product basis (mode "product"), each minimized by coordinate
    descent from seeded random restarts. The two-qubit result is an upper
    bound on the true minimum.

    `warm_start` (the parameters of a neighbouring optimum) replaces the
    third grid start, or the first random restart for two measured qubits.
    """
    m = qmath.as_cmat(rho)
    n = _n_qubits(m)
    measured = [int(q) for q in measured]
    if unmeasured is None:
        unmeasured = [q for q in range(n) if q not in measured]
    unmeasured = [int(q) for q in unmeasured]
    if not 1 <= len(measured) <= 2:
        raise ValueError("discord supports one or two measured qubits")
    if not unmeasured or set(measured) & set(unmeasured):
        raise ValueError("measured and unmeasured groups must be disjoint and nonempty")
    if mode not in ("full", "product"):
        raise ValueError(f"unknown discord mode {mode!r}")

    joint = _reduce(m, measured + unmeasured)
    dim_m = 2 ** len(measured)
    s_measured = svne(qmath.partial_trace(joint, [dim_m, joint.shape[0] // dim_m], [0]))
    s_joint = svne(joint)

    if len(measured) == 1:
        def objective(x):
            return conditional_entropy(joint, rotation_u(x[0], x[1]), dim_m)

        batch = None
        if joint.shape[0] == 4:
            def batch(thetas, phis):
                return _grid_conditional_entropies(joint, thetas, phis)

        best_x, values = _minimize_single(objective, grid, warm_start, batch)
        n_restarts = len(values)
    else:
        builder = givens_unitary if mode == "full" else product_unitary
        n_params = 12 if mode == "full" else 4

        def objective(x):
            return conditional_entropy(joint, builder(x), dim_m)

        best_x, values = _minimize_restarts(objective, n_params, restarts, seed, warm_start)
        n_restarts = restarts

    best = min(values)
    spread = max(values) - best
    converged = spread <= SPREAD_TOL
    if not converged:
        logger.debug(f"Discord restarts disagree by {spread:.2e} (measured={measured})")

    return DiscordResult(
        value=s_measured - s_joint + best,
        measured=measured,
        unmeasured=unmeasured,
        mode=mode,
        measured_entropy=s_measured,
        parameters=[float(v) for v in best_x],
        seed=seed,
        restarts=n_restarts,
        objective_values=values,
        spread=spread,
        converged=converged,
    )
