"""
Linear algebra tests.

Tests cover:
- Half-spin operators and tensor embedding
- Jacobi eigensolver against numpy, including degenerate and badly scaled input
- Partial trace, partial transpose and qubit permutation
- Time evolution

Run with: pytest tests/test_qmath.py -v
"""
import math
import sys
import warnings
from pathlib import Path

import numpy as np
import pytest
from loguru import logger

sys.path.insert(0, str(Path(__file__).parent.parent))

from tests.helpers import bell_state_phi, random_density, random_hermitian

from app import qmath
from app.errors import NotHermitianError
from app.experiments import hamiltonian_N, preset, rho_ab_closed_form, rho_mab_closed_form


def _collect_warnings() -> tuple[list, int]:
    messages = []
    handler = logger.add(messages.append, level="WARNING")
    return messages, handler


class TestSpinOperators:
    """Half-spin algebra in the (down, up) basis."""

    def test_commutator(self):
        """[sigma_x, sigma_y] = i sigma_z."""
        sx, sy, sz = qmath.spin_operators()
        assert np.allclose(sx @ sy - sy @ sx, 1j * sz)

    def test_eigenvalues_are_half(self):
        """Every axis operator has eigenvalues -1/2 and +1/2."""
        for op in qmath.AXIS_OPERATORS.values():
            assert np.allclose(np.linalg.eigvalsh(op), [-0.5, 0.5])

    def test_z_ordering(self):
        """Basis index 0 is spin down."""
        assert qmath.SIGMA_Z[0, 0] == -0.5
        assert qmath.SIGMA_Z[1, 1] == 0.5

    def test_embed_site_is_most_significant(self):
        """Site 0 is the leftmost Kronecker factor."""
        op = qmath.embed(qmath.SIGMA_Z, 0, 2)
        assert np.allclose(op, np.kron(qmath.SIGMA_Z, np.eye(2)))

    def test_embed_out_of_range(self):
        """Sites beyond the register are rejected."""
        with pytest.raises(ValueError):
            qmath.embed(qmath.SIGMA_X, 3, 2)


class TestHermEig:
    """Cyclic Jacobi eigendecomposition."""

    @pytest.mark.parametrize("dim,seed", [(2, 1), (4, 2), (8, 3), (8, 4)])
    def test_matches_numpy(self, dim, seed):
        """Eigenvalues agree with numpy.linalg.eigvalsh."""
        h = random_hermitian(dim, seed)
        eig = qmath.herm_eig(h)
        assert np.allclose(eig.eigenvalues, np.linalg.eigvalsh(h), atol=1e-10)

    def test_eigenvectors_unitary_and_reconstruct(self):
        """V is unitary and V diag(lambda) V^dagger gives back h."""
        h = random_hermitian(8, 11)
        eig = qmath.herm_eig(h)
        v = eig.eigenvectors
        assert np.allclose(v.conj().T @ v, np.eye(8), atol=1e-10)
        assert np.allclose(eig.reconstruct(), h, atol=1e-10)

    def test_ascending(self):
        """Eigenvalues come out sorted."""
        eig = qmath.herm_eig(random_hermitian(4, 5))
        assert np.all(np.diff(eig.eigenvalues) >= 0)

    def test_degenerate_spectrum(self):
        """Identity-like blocks converge immediately."""
        eig = qmath.herm_eig(np.eye(4) * 0.25)
        assert np.allclose(eig.eigenvalues, 0.25)

    def test_rejects_non_hermitian(self):
        """A non-Hermitian matrix raises with its asymmetry attached."""
        with pytest.raises(NotHermitianError) as info:
            qmath.herm_eig(np.array([[0, 1], [0, 0]], dtype=complex))
        assert info.value.asymmetry > 0.5

    def test_experiment_I_states_reconstruct(self):
        """Degenerate rho_AB, its partial transpose and rho_MAB decompose cleanly on the chi*t grid."""
        messages, handler = _collect_warnings()
        try:
            for chi_t in np.linspace(0.0, math.pi / 2, 65):
                rho_ab = rho_ab_closed_form(chi_t)
                for m in (rho_ab, qmath.partial_transpose(rho_ab, [2, 2], 0), rho_mab_closed_form(chi_t)):
                    eig = qmath.herm_eig(m)
                    assert np.linalg.norm(eig.reconstruct() - m) < 1e-10
        finally:
            logger.remove(handler)
        assert messages == []

    @pytest.mark.parametrize("case", ["i", "iii", "D"])
    def test_hamiltonian_in_rad_per_second(self, case):
        """Relative reconstruction error stays at rounding level for kHz-scale Hamiltonians."""
        h = hamiltonian_N(preset(case))
        messages, handler = _collect_warnings()
        try:
            eig = qmath.herm_eig(h)
        finally:
            logger.remove(handler)
        assert messages == []
        assert np.linalg.norm(eig.reconstruct() - h) < 1e-10 * np.linalg.norm(h)
        assert np.allclose(eig.eigenvalues, np.linalg.eigvalsh(h), atol=1e-9 * np.linalg.norm(h))

    def test_tiny_coupling_does_not_overflow(self):
        """A negligible a[p, q] next to an O(1) gap neither overflows nor spoils the result."""
        h = np.array([[0.0, 1e-200, 1.0], [1e-200, 1.0, 0.0], [1.0, 0.0, 2.0]], dtype=complex)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            eig = qmath.herm_eig(h)
        assert np.allclose(eig.eigenvalues, np.linalg.eigvalsh(h), atol=1e-12)
        assert np.allclose(eig.reconstruct(), h, atol=1e-12)


class TestHermEigvalsh:
    """Eigenvalues only, closed form for 2x2."""

    @pytest.mark.parametrize("seed", [1, 2, 3])
    def test_two_by_two_matches_numpy(self, seed):
        """The closed form agrees with numpy."""
        h = random_hermitian(2, seed)
        assert np.allclose(qmath.herm_eigvalsh(h), np.linalg.eigvalsh(h), atol=1e-12)

    def test_larger_matrices_use_jacobi(self):
        """Four-by-four input gives the Jacobi eigenvalues."""
        h = random_hermitian(4, 9)
        assert np.allclose(qmath.herm_eigvalsh(h), qmath.herm_eig(h).eigenvalues)

    def test_two_by_two_rejects_non_hermitian(self):
        """The closed form keeps the Hermitian check."""
        with pytest.raises(NotHermitianError):
            qmath.herm_eigvalsh(np.array([[0, 1], [0, 0]], dtype=complex))


class TestPartialOperations:
    """Partial trace, partial transpose and permutations."""

    def test_partial_trace_of_product(self):
        """Tracing out one factor of a product returns the other."""
        a = random_density(1, 1)
        b = random_density(1, 2)
        rho = np.kron(a, b)
        assert np.allclose(qmath.partial_trace(rho, [2, 2], [0]), a)
        assert np.allclose(qmath.partial_trace(rho, [2, 2], [1]), b)

    def test_keep_order_is_respected(self):
        """Kept subsystems appear in the order requested."""
        a, b, c = (random_density(1, s) for s in (3, 4, 5))
        rho = qmath.kron_all([a, b, c])
        assert np.allclose(qmath.partial_trace(rho, [2, 2, 2], [2, 0]), np.kron(c, a))

    def test_partial_trace_preserves_trace(self):
        """The reduced state keeps unit trace."""
        rho = random_density(3, 7)
        reduced = qmath.partial_trace(rho, [2, 2, 2], [1])
        assert np.trace(reduced).real == pytest.approx(1.0)

    def test_bad_keep_set(self):
        """Out-of-range subsystems are rejected."""
        with pytest.raises(ValueError):
            qmath.partial_trace(np.eye(4) / 4, [2, 2], [2])

    def test_partial_transpose_of_bell(self):
        """The partial transpose of a Bell projector has eigenvalue -1/2."""
        pt = qmath.partial_transpose(bell_state_phi(), [2, 2], 0)
        assert np.linalg.eigvalsh(pt)[0] == pytest.approx(-0.5)

    def test_permute_qubits(self):
        """Swapping two qubits swaps the Kronecker factors."""
        a, b = random_density(1, 8), random_density(1, 9)
        assert np.allclose(qmath.permute_qubits(np.kron(a, b), [1, 0]), np.kron(b, a))


class TestEvolution:
    """Propagator and evolve."""

    def test_unitary(self):
        """exp(-iHt) is unitary."""
        prop = qmath.Propagator(random_hermitian(4, 12))
        u = prop.unitary(0.37)
        assert np.allclose(u.conj().T @ u, np.eye(4), atol=1e-10)

    def test_zero_time_is_identity(self):
        """No time, no change."""
        rho = random_density(2, 13)
        assert np.allclose(qmath.evolve(rho, random_hermitian(4, 14), 0.0), rho)

    def test_purity_conserved(self):
        """Unitary evolution keeps Tr(rho^2)."""
        rho = random_density(2, 15)
        out = qmath.Propagator(random_hermitian(4, 16)).apply(rho, 2.5)
        assert np.trace(out @ out).real == pytest.approx(np.trace(rho @ rho).real, abs=1e-12)

    def test_matches_matrix_exponential_of_diagonal(self):
        """Diagonal Hamiltonians give phase factors."""
        h = np.diag([1.0, -2.0]).astype(complex)
        u = qmath.Propagator(h).unitary(0.5)
        assert np.allclose(u, np.diag(np.exp(-1j * np.array([1.0, -2.0]) * 0.5)))
