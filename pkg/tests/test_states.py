"""
State model tests.

Tests cover:
- DensityMatrix / PureState validation
- Named state constructors (Bell, spin coherent, pseudo-pure)
- The experiment I initial state

Run with: pytest tests/test_states.py -v
"""
import math
import sys
from pathlib import Path

import numpy as np
import pytest
from pydantic import ValidationError

sys.path.insert(0, str(Path(__file__).parent.parent))

from tests.helpers import random_density

from app import qmath
from app.states import (
    DensityMatrix,
    PureState,
    basis_state,
    bell_phi_plus,
    bell_psi_plus,
    product_state,
    pseudo_pure,
    pseudo_pure_purity,
    rho_mab_initial,
    spin_coherent,
)


class TestDensityMatrix:
    """Validation of density matrices."""

    def test_accepts_valid_state(self):
        """A random density matrix validates."""
        state = DensityMatrix.from_matrix(random_density(2, 1))
        assert state.n_qubits == 2
        assert state.dim == 4

    def test_rejects_bad_trace(self):
        """Trace must be one."""
        with pytest.raises(ValidationError):
            DensityMatrix.from_matrix(np.eye(4) / 2)

    def test_rejects_non_hermitian(self):
        """Non-Hermitian matrices are rejected."""
        m = np.eye(2, dtype=complex) / 2
        m[0, 1] = 0.1
        with pytest.raises(ValidationError):
            DensityMatrix.from_matrix(m)

    def test_rejects_negative_eigenvalue(self):
        """Negative eigenvalues are rejected."""
        with pytest.raises(ValidationError):
            DensityMatrix.from_matrix(np.diag([1.5, -0.5]))

    def test_rejects_non_power_of_two(self):
        """Dimensions must be powers of two."""
        with pytest.raises(ValueError):
            DensityMatrix.from_matrix(np.eye(3) / 3)

    def test_purity_and_reduction(self):
        """A Bell state is pure with maximally mixed halves."""
        state = bell_phi_plus().density()
        assert state.purity() == pytest.approx(1.0)
        reduced = state.reduced([0])
        assert np.allclose(reduced.matrix, np.eye(2) / 2)


class TestPureState:
    """Normalized amplitude vectors."""

    def test_rejects_unnormalized(self):
        """Pure states must be normalized."""
        with pytest.raises(ValidationError):
            PureState.from_amplitudes([1.0, 1.0])

    def test_basis_state_bit_one_is_up(self):
        """Bit 1 is spin up."""
        state = basis_state([1, 0])
        assert state.amplitudes[2] == 1.0

    def test_product_state(self):
        """Product states are Kronecker products in qubit order."""
        up = np.array([0, 1])
        state = product_state(up, up)
        assert np.allclose(state.amplitudes, [0, 0, 0, 1])

    def test_bell_states_orthogonal(self):
        """Phi+ and Psi+ are orthogonal."""
        assert abs(np.vdot(bell_phi_plus().amplitudes, bell_psi_plus().amplitudes)) < 1e-12


class TestSpinCoherent:
    """Spin coherent states."""

    def test_north_pole_is_all_up(self):
        """theta = 0 puts every spin up."""
        state = spin_coherent(0.0, 0.0, 2)
        assert np.allclose(state.amplitudes, [0, 0, 0, 1])

    def test_mean_spin_direction(self):
        """The mean spin points along (theta, phi)."""
        theta, phi = 1.1, 0.4
        rho = spin_coherent(theta, phi, 1).projector()
        n = [np.trace(rho @ op).real * 2 for op in qmath.spin_operators()]
        expected = [math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)]
        assert np.allclose(n, expected)

    @pytest.mark.parametrize("theta,phi", [(-0.1, 0.0), (3.5, 0.0), (1.0, 2 * math.pi)])
    def test_angle_ranges(self, theta, phi):
        """Angles outside their ranges are rejected."""
        with pytest.raises(ValueError):
            spin_coherent(theta, phi)


class TestPseudoPure:
    """Pseudo-pure initial states."""

    @pytest.mark.parametrize("n,eps", [(2, 1e-4), (3, 1e-4), (2, 0.5), (3, 1.0)])
    def test_purity_formula(self, n, eps):
        """Numeric purity equals the closed form."""
        assert pseudo_pure(n, eps).purity() == pytest.approx(pseudo_pure_purity(n, eps), abs=1e-14)

    def test_all_down_population(self):
        """The pseudo-pure excess sits on all-down."""
        rho = pseudo_pure(2, 0.2).matrix
        assert rho[0, 0].real == pytest.approx(0.8 / 4 + 0.2)

    def test_epsilon_out_of_range(self):
        """Polarization must lie in [0, 1]."""
        with pytest.raises(ValueError):
            pseudo_pure(2, 1.5)


class TestExperimentIInitialState:
    """rho_MAB(0) and its (A, B) marginal."""

    def test_reduced_ab(self):
        """rho_AB(0) = 1/4 (I + 4 sigma_x sigma_x)."""
        rho_ab = rho_mab_initial().reduced([1, 2]).matrix
        expected = 0.25 * (np.eye(4) + 4 * np.kron(qmath.SIGMA_X, qmath.SIGMA_X))
        assert np.allclose(rho_ab, expected)

    def test_mixed_with_two_branches(self):
        """The initial experiment I state mixes two pure branches."""
        assert rho_mab_initial().purity() == pytest.approx(0.5)
