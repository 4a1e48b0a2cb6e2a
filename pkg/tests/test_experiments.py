"""
Experiment runner tests.

Tests cover:
- Hamiltonians and the experiment I closed form
- Case presets
- Short experiment I and II/III time series, including cross-checks

Run with: pytest tests/test_experiments.py -v
"""
import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))

from app import experiments, qmath
from app.errors import ConfigError, CrossCheckError
from app.experiments import (
    CSV_COLUMNS,
    PRESET_INFO,
    analyze_state,
    hamiltonian_I,
    hamiltonian_N,
    hamiltonian_S,
    hz,
    preset,
    psi_branches,
    rho_ab_closed_form,
    rho_mab_closed_form,
    run_experiment_I,
    run_experiment_N,
)
from app.models import AnalysisSettings, Bipartition, ExperimentIConfig, ExperimentNConfig
from app.states import pseudo_pure_purity, rho_mab_initial

FAST = AnalysisSettings(
    seed=11,
    n_samples=60,
    n_pairs=24,
    discord_grid=8,
    discord_restarts=2,
    discord_mode="product",
)


def _assert_records_match(first, second):
    for key in ("xi_tei", "xi_ipr", "xi_pcc", "xi_bd"):
        assert getattr(first.indicators, key) == pytest.approx(getattr(second.indicators, key), abs=1e-9)
    assert first.qmi == pytest.approx(second.qmi, abs=1e-9)
    assert first.negativity == pytest.approx(second.negativity, abs=1e-9)
    assert first.discord.value == pytest.approx(second.discord.value, abs=1e-6)
    assert first.squeezing.extent_1 == pytest.approx(second.squeezing.extent_1, abs=1e-6)
    assert first.squeezing.extent_2 == pytest.approx(second.squeezing.extent_2, abs=1e-6)


class TestHamiltonians:
    """Spin Hamiltonians."""

    def test_hermitian(self):
        """All three Hamiltonian builders give Hermitian matrices."""
        for h in (hamiltonian_S(0.7), hamiltonian_I(10.0, 20.0, 5.0), hamiltonian_N(preset("A"))):
            assert qmath.hermitian_asymmetry(h) < 1e-12

    def test_coupling_hamiltonian_is_diagonal(self):
        """The pure ZZ coupling Hamiltonian is diagonal."""
        h = hamiltonian_I(100.0, 50.0, 10.0)
        assert np.allclose(h, np.diag(np.diag(h)))

    def test_two_qubit_dimension(self):
        """Two-qubit presets give 4x4 Hamiltonians."""
        assert hamiltonian_N(preset("i")).shape == (4, 4)


class TestClosedForm:
    """Experiment I closed-form state."""

    @pytest.mark.parametrize("chi_t", [0.0, 0.2, math.pi / 8, 1.0, math.pi / 2])
    def test_matches_numerical_evolution(self, chi_t):
        """The closed form equals propagated rho_MAB."""
        numeric = qmath.Propagator(hamiltonian_S(1.0)).apply(rho_mab_initial().matrix, chi_t)
        assert np.allclose(numeric, rho_mab_closed_form(chi_t), atol=1e-10)

    def test_branches_normalized_and_orthogonal(self):
        """Both branch states are unit vectors and orthogonal."""
        psi_0, psi_1 = psi_branches(0.4)
        assert np.linalg.norm(psi_0) == pytest.approx(1.0)
        assert abs(np.vdot(psi_0, psi_1)) < 1e-12

    def test_pure_at_pi_over_8(self):
        """rho_AB is pure at chi*t = pi/8."""
        rho = rho_ab_closed_form(math.pi / 8)
        assert np.trace(rho @ rho).real == pytest.approx(1.0)

    def test_period(self):
        """rho_AB repeats after pi/2."""
        assert np.allclose(rho_ab_closed_form(0.0), rho_ab_closed_form(math.pi / 2), atol=1e-12)


class TestPresets:
    """Built-in experiment II and III cases."""

    def test_all_cases_build(self):
        """Every preset builds and measures one side of its cut."""
        for case in PRESET_INFO:
            cfg = preset(case)
            assert cfg.case == case
            assert set(cfg.measured) in (set(cfg.bipartition.side_a), set(cfg.bipartition.side_b))

    def test_unknown_case_lists_valid_labels(self):
        """The error names every valid case."""
        with pytest.raises(ConfigError, match="i, ii, iii, A, B, C, D"):
            preset("E")

    def test_two_qubit_parameters(self):
        """Case ii frequencies in rad/s."""
        cfg = preset("ii")
        assert cfg.omega[1] == pytest.approx(hz(217.0))
        assert cfg.omega[0] == pytest.approx(hz(217.0) / 4)
        assert cfg.big_omega == pytest.approx([hz(434.0)] * 2)
        assert cfg.lam[0][1] == pytest.approx(hz(868.0))

    def test_three_qubit_detunings(self):
        """Case A detunings are pairwise coupling means."""
        cfg = preset("A")
        l12, l13, l23 = hz(224.7), hz(-311.1), hz(49.7)
        assert cfg.big_omega == pytest.approx([(l12 + l13) / 2, (l12 + l23) / 2, (l13 + l23) / 2])

    def test_case_c_cut(self):
        """Case C cuts qubit 1 from qubits 0 and 2."""
        cfg = preset("C")
        assert cfg.bipartition.side_a == (1,)
        assert cfg.bipartition.side_b == (0, 2)
        assert cfg.measured == [0, 2]

    def test_overrides(self):
        """Grid and polarization overrides are applied."""
        cfg = preset("B", t_grid=[0.0, 0.001], epsilon=0.5)
        assert cfg.t_grid == [0.0, 0.001]
        assert cfg.epsilon == 0.5

    def test_bad_grid(self):
        """Invalid preset parameters surface as a configuration error."""
        with pytest.raises(ConfigError):
            preset("i", t_grid=[0.0, 0.0])

    def test_bad_epsilon(self):
        """Polarization outside [0, 1] is a configuration error."""
        with pytest.raises(ConfigError, match="case ii"):
            preset("ii", epsilon=2.0)


class TestExperimentI:
    """Short experiment I runs."""

    def test_reference_points(self):
        """Indicators, discord, negativity and extents at chi*t = 0 and pi/8."""
        cfg = ExperimentIConfig(chi_t_grid=[0.0, math.pi / 8], analysis=FAST)
        run = run_experiment_I(cfg)
        start, peak = run.records
        assert start.indicators.xi_tei == pytest.approx(1 / 9, abs=1e-9)
        assert peak.indicators.xi_tei == pytest.approx(1 / 3, abs=1e-9)
        assert start.discord.value == pytest.approx(0.0, abs=1e-6)
        assert peak.discord.value == pytest.approx(1.0, abs=1e-6)
        assert peak.negativity == pytest.approx(0.5, abs=1e-9)
        assert start.squeezing.extent_1 == pytest.approx(0.0, abs=1e-6)
        assert peak.squeezing.extent_2 == pytest.approx(1.0, abs=1e-6)

    def test_rows_have_all_columns(self):
        """A record row carries every CSV column."""
        run = run_experiment_I(ExperimentIConfig(chi_t_grid=[0.1], analysis=FAST))
        row = run.rows()[0]
        assert list(row) == CSV_COLUMNS
        assert row["xi_tei_reduced"] is not None

    def test_cross_check_failure(self, monkeypatch):
        """A wrong closed form aborts the run."""
        monkeypatch.setattr(experiments, "rho_mab_closed_form", lambda chi_t: np.eye(8) / 8)
        with pytest.raises(CrossCheckError):
            run_experiment_I(ExperimentIConfig(chi_t_grid=[0.3], analysis=FAST))

    def test_grid_out_of_range(self):
        """chi*t beyond pi/2 is rejected."""
        with pytest.raises(ValueError):
            ExperimentIConfig(chi_t_grid=[0.0, 2.0])

    def test_record_repeats_after_half_pi(self):
        """The record at chi*t = 0 equals the one at pi/2."""
        run = run_experiment_I(ExperimentIConfig(chi_t_grid=[0.0, math.pi / 2], analysis=FAST))
        _assert_records_match(*run.records)

    def test_interior_record_repeats_after_half_pi(self):
        """The record at chi*t = 0.3 equals a record computed from the state at 0.3 + pi/2."""
        run = run_experiment_I(ExperimentIConfig(chi_t_grid=[0.3], analysis=FAST))
        shifted = qmath.Propagator(hamiltonian_S(1.0)).apply(rho_mab_initial().matrix, 0.3 + math.pi / 2)
        rho_ab = qmath.partial_trace(shifted, [2, 2, 2], [1, 2])
        later = analyze_state(rho_ab, 0.3 + math.pi / 2, Bipartition(side_a=(0,), side_b=(1,)), [1], FAST)
        _assert_records_match(run.records[0], later)

    def test_extents_rise_to_pi_over_8(self):
        """Both extents are non-decreasing on [0, pi/8] and QMI reaches 2 there."""
        settings = FAST.model_copy(update={"compute_discord": False})
        grid = [k * math.pi / 32 for k in range(5)]
        run = run_experiment_I(ExperimentIConfig(chi_t_grid=grid, analysis=settings))
        for key in ("extent_1", "extent_2"):
            values = [getattr(r.squeezing, key) for r in run.records]
            assert all(b >= a - 1e-6 for a, b in zip(values, values[1:]))
        assert run.records[-1].qmi == pytest.approx(2.0, abs=1e-9)

    def test_discord_warm_start_is_threaded(self):
        """Each grid point after the first starts from its neighbour's optimum."""
        run = run_experiment_I(ExperimentIConfig(chi_t_grid=[0.2, 0.25, 0.3], analysis=FAST))
        for record in run.records:
            assert len(record.discord.objective_values) == 3
            assert record.discord.value >= -1e-9


class TestExperimentN:
    """Short experiment II/III runs from the pseudo-pure state."""

    def test_initial_values_tiny(self):
        """At t = 0 the pseudo-pure state carries only O(eps^2) correlations."""
        run = run_experiment_N(preset("i", t_grid=[0.0], analysis=FAST))
        record = run.records[0]
        assert record.indicators.xi_tei < 1e-8
        assert record.indicators.xi_bd < 1e-8
        assert record.qmi < 1e-8
        assert record.discord.value < 1e-8

    def test_exact_zero_for_maximally_mixed(self):
        """eps = 0 leaves the maximally mixed state uncorrelated."""
        run = run_experiment_N(preset("ii", t_grid=[0.0, 0.003], epsilon=0.0, analysis=FAST))
        for record in run.records:
            assert record.indicators.xi_tei == pytest.approx(0.0, abs=1e-12)
            assert record.indicators.xi_pcc == pytest.approx(0.0, abs=1e-12)

    def test_blockade_discord_small(self):
        """Case i stays discord-free."""
        run = run_experiment_N(preset("i", t_grid=[0.0, 0.002, 0.005], analysis=FAST))
        assert max(r.discord.value for r in run.records) <= 1e-7

    def test_purity_conserved(self):
        """Unitary evolution keeps the pseudo-pure purity."""
        run = run_experiment_N(preset("iii", t_grid=[0.0, 0.004, 0.008], analysis=FAST))
        expected = pseudo_pure_purity(2, 1e-4)
        for record in run.records:
            assert record.purity == pytest.approx(expected, abs=1e-10)

    def test_three_qubit_case(self):
        """Case D runs without discord and without second-order squeezing."""
        settings = FAST.model_copy(update={"compute_discord": False})
        run = run_experiment_N(preset("D", t_grid=[0.0, 0.01], analysis=settings))
        assert run.time_unit == "s"
        record = run.records[-1]
        assert record.discord is None
        assert record.tomogram.n_qubits == 3
        assert record.squeezing.extent_2 is None
        assert record.indicators.xi_tei >= -1e-12

    def test_uncoupled_spins_stay_uncorrelated(self):
        """Without couplings nothing correlates."""
        settings = FAST.model_copy(update={"compute_discord": False})
        cfg = ExperimentNConfig(
            case="free",
            n_qubits=2,
            omega=[hz(217.0), hz(54.25)],
            big_omega=[0.0, 0.0],
            lam=[[0.0, 0.0], [0.0, 0.0]],
            epsilon=1.0,
            t_grid=[0.0, 0.001, 0.002],
            bipartition=Bipartition(side_a=(0,), side_b=(1,)),
            measured=[0],
            analysis=settings,
        )
        for record in run_experiment_N(cfg).records:
            assert record.qmi == pytest.approx(0.0, abs=1e-9)

    def test_coupling_builds_correlations(self):
        """With eps = 1 the coupled evolution correlates the two spins."""
        settings = FAST.model_copy(update={"compute_discord": False})
        grid = [0.0, 0.001, 0.002, 0.003, 0.004]
        run = run_experiment_N(preset("i", t_grid=grid, epsilon=1.0, analysis=settings))
        assert run.records[0].qmi == pytest.approx(0.0, abs=1e-9)
        assert max(r.qmi for r in run.records) > 1e-6
