"""
Dense complex linear algebra for registers of up to a few qubits.

All operators use the half-spin convention (eigenvalues +-1/2) in the basis
order |down> -> 0, |up> -> 1, with the leftmost qubit as the most significant
index. Matrices are plain numpy arrays; functions never mutate their inputs.
"""
from typing import NamedTuple, Sequence, Union

import numpy as np
from loguru import logger
from numpy.typing import NDArray

from app.errors import NotHermitianError

CMat = NDArray[np.complex128]

HERMITIAN_TOL = 1e-10
JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100

IDENTITY2 = np.eye(2, dtype=complex)
SIGMA_X = 0.5 * np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = 0.5 * np.array([[0, 1j], [-1j, 0]], dtype=complex)
SIGMA_Z = 0.5 * np.array([[-1, 0], [0, 1]], dtype=complex)

AXIS_OPERATORS = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}


class HermEigen(NamedTuple):
    """Eigenvalues ascending; eigenvectors as the columns of a unitary."""

    eigenvalues: NDArray[np.float64]
    eigenvectors: CMat

    def reconstruct(self) -> CMat:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def spin_operators() -> tuple[CMat, CMat, CMat]:
    """Half-spin operators (sigma_x, sigma_y, sigma_z)."""
    return SIGMA_X.copy(), SIGMA_Y.copy(), SIGMA_Z.copy()


def as_cmat(a) -> CMat:
    """Return `a` (array or object with a `.matrix`) as a finite complex array."""
    arr = np.asarray(getattr(a, "matrix", a), dtype=complex)
    if arr.ndim != 2 or min(arr.shape) < 1:
        raise ValueError(f"expected a 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix has non-finite entries")
    return arr


def _require_square(a: CMat) -> int:
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return a.shape[0]


def kron(a, b) -> CMat:
    """Tensor product; entry (i*db + k, j*db + l) is a[i,j] * b[k,l]."""
    return np.kron(as_cmat(a), as_cmat(b))


def kron_all(ops: Sequence) -> CMat:
    out = np.ones((1, 1), dtype=complex)
    for op in ops:
        out = np.kron(out, as_cmat(op))
    return out


def embed(op, site: int, n_qubits: int) -> CMat:
    """Place a single-qubit operator on `site` of an n-qubit register."""
    if not 0 <= site < n_qubits:
        raise ValueError(f"site {site} out of range for {n_qubits} qubits")
    factors = [IDENTITY2] * n_qubits
    factors[site] = as_cmat(op)
    return kron_all(factors)


def _check_dims(rho: CMat, dims: Sequence[int]) -> list[int]:
    dims = [int(d) for d in dims]
    if not dims or any(d < 1 for d in dims):
        raise ValueError(f"invalid subsystem dimensions {dims}")
    if int(np.prod(dims)) != rho.shape[0]:
        raise ValueError(
            f"subsystem dimensions {dims} do not match matrix dimension {rho.shape[0]}"
        )
    return dims


def partial_trace(rho, dims: Sequence[int], keep: Sequence[int]) -> CMat:
    """Trace out every subsystem not listed in `keep`.

    The kept subsystems appear in the result in the order given by `keep`.
    """
    rho = as_cmat(rho)
    _require_square(rho)
    dims = _check_dims(rho, dims)
    keep = [int(k) for k in keep]
    n = len(dims)
    if not keep:
        raise ValueError("keep set is empty")
    if len(set(keep)) != len(keep) or any(not 0 <= k < n for k in keep):
        raise ValueError(f"invalid keep set {keep} for {n} subsystems")

    traced = [i for i in range(n) if i not in keep]
    order = keep + traced
    dk = int(np.prod([dims[i] for i in keep]))
    dt = int(np.prod([dims[i] for i in traced])) if traced else 1

    tensor = rho.reshape(dims + dims)
    tensor = tensor.transpose(order + [n + i for i in order])
    tensor = tensor.reshape(dk, dt, dk, dt)
    return np.trace(tensor, axis1=1, axis2=3)


def partial_transpose(rho, dims: Sequence[int], subsystem: Union[int, Sequence[int]]) -> CMat:
    """Transpose the indices of one subsystem (or a group of subsystems)."""
    rho = as_cmat(rho)
    _require_square(rho)
    dims = _check_dims(rho, dims)
    n = len(dims)
    targets = [subsystem] if isinstance(subsystem, (int, np.integer)) else list(subsystem)
    if not targets or any(not 0 <= int(s) < n for s in targets):
        raise ValueError(f"invalid subsystem {subsystem} for {n} subsystems")

    axes = list(range(2 * n))
    for s in targets:
        s = int(s)
        axes[s], axes[n + s] = axes[n + s], axes[s]
    return rho.reshape(dims + dims).transpose(axes).reshape(rho.shape)


def permute_qubits(rho, order: Sequence[int]) -> CMat:
    """Reorder the qubits of a 2^n x 2^n matrix; new qubit k is old qubit order[k]."""
    rho = as_cmat(rho)
    dim = _require_square(rho)
    n = int(round(np.log2(dim)))
    order = [int(o) for o in order]
    if 2**n != dim or sorted(order) != list(range(n)):
        raise ValueError(f"invalid qubit order {order} for dimension {dim}")
    tensor = rho.reshape([2] * (2 * n)).transpose(order + [n + o for o in order])
    return tensor.reshape(dim, dim)


def hermitian_asymmetry(h) -> float:
    h = as_cmat(h)
    return float(np.linalg.norm(h - h.conj().T))


def herm_eig(h, tol: float = JACOBI_TOL) -> HermEigen:
    """Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi sweeps.

    Each rotation first removes the phase of a[p, q] and then applies the
    real symmetric Jacobi rotation. Sweeps stop once the off-diagonal
    Frobenius norm drops below `tol` times max(1, ||h||_F).

    Raises:
        NotHermitianError: if ||h - h^dagger||_F exceeds 1e-10.
    """
    a = as_cmat(h).copy()
    n = _require_square(a)
    asym = float(np.linalg.norm(a - a.conj().T))
    if asym > HERMITIAN_TOL:
        raise NotHermitianError(asym)
    a = 0.5 * (a + a.conj().T)
    v = np.eye(n, dtype=complex)
    threshold = tol * max(1.0, float(np.linalg.norm(a)))
    eps = np.finfo(float).eps

    for sweep in range(JACOBI_MAX_SWEEPS):
        # measured directly; |a|^2 - |diag|^2 cancels to rounding noise
        off = float(np.linalg.norm(a - np.diag(np.diag(a))))
        if off < threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                app, aqq = a[p, p].real, a[q, q].real
                if mag == 0.0 or mag <= eps * np.sqrt(abs(app * aqq)):
                    a[p, q] = a[q, p] = 0.0
                    continue
                phase = apq / mag
                theta = (aqq - app) / (2.0 * mag)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    sign = 1.0 if theta >= 0 else -1.0
                    t = sign / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # phase removal diag(1, conj(phase)) followed by the real rotation
                g = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ g
                a[idx, :] = g.conj().T @ a[idx, :]
                a[p, q] = a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                v[:, idx] = v[:, idx] @ g
    else:
        logger.warning(f"Jacobi eigensolver stopped after {JACOBI_MAX_SWEEPS} sweeps (n={n})")

    values = np.real(np.diag(a))
    order = np.argsort(values, kind="stable")
    return HermEigen(values[order], v[:, order])


def herm_eigvalsh(h) -> NDArray[np.float64]:
    """Ascending eigenvalues only; 2x2 matrices use the closed form."""
    a = as_cmat(h)
    if a.shape == (2, 2):
        asym = float(np.linalg.norm(a - a.conj().T))
        if asym > HERMITIAN_TOL:
            raise NotHermitianError(asym)
        mean = 0.5 * (a[0, 0].real + a[1, 1].real)
        radius = float(np.hypot(0.5 * (a[0, 0].real - a[1, 1].real), abs(a[0, 1])))
        return np.array([mean - radius, mean + radius])
    return herm_eig(a).eigenvalues


def unitary_from_eig(eig: HermEigen, t: float) -> CMat:
    """exp(-i H t) built from a cached decomposition of H."""
    v = eig.eigenvectors
    return (v * np.exp(-1j * eig.eigenvalues * t)) @ v.conj().T


def evolve(rho, h, t: float) -> CMat:
    """U rho U^dagger with U = exp(-i h t); h in rad/s when t is in seconds."""
    return Propagator(h).apply(rho, t)


class Propagator:
    """Time evolution under a fixed Hamiltonian, diagonalized once."""

    def __init__(self, h):
        self.hamiltonian = as_cmat(h)
        self.eig = herm_eig(self.hamiltonian)

    def unitary(self, t: float) -> CMat:
        return unitary_from_eig(self.eig, t)

    def apply(self, rho, t: float) -> CMat:
        u = self.unitary(t)
        out = u @ as_cmat(rho) @ u.conj().T
        return 0.5 * (out + out.conj().T)
