"""Test dynamics module."""

import math

import numpy as np
import pytest

from osc_qft.drives import (
    occupied_photon_numbers,
    perfect_chain_couplings,
    synthesize_photon_preserving_drive,
)
from osc_qft.dynamics import (
    ConstantHamiltonian,
    DressedBasis,
    InteractionHamiltonian,
    PropagationConfig,
    RampHamiltonian,
    detuned_frame,
    dressed_energy,
    dressed_state,
    dressing_map,
    evolve_operator,
    interaction_hamiltonian,
    jaynes_cummings_hamiltonian,
    pair_space,
    propagate,
    ramp_operator,
)
from osc_qft.exceptions import IntegrationError, PreconditionError
from osc_qft.hilbert import CompositeSpace, FockSpace, StateVector, basis_state, overlap_fidelity

TWO_PI = 2 * math.pi


class LabFrameRabi:
    """Two-level system driven at resonance with the counter-rotating term kept."""

    dim = 2

    def __init__(self, splitting: float, rabi: float):
        self.splitting = splitting
        self.rabi = rabi
        self.max_frequency = splitting

    def __call__(self, t):
        h = np.diag([0.0, self.splitting]).astype(complex)
        return h + self.rabi * math.cos(self.splitting * t) * np.array([[0, 1], [1, 0]], dtype=complex)


class Understated:
    """Constant generator that reports a slower rate than it has."""

    max_frequency = 1.0

    def __init__(self, matrix):
        self.matrix = np.asarray(matrix, dtype=complex)
        self.dim = self.matrix.shape[0]

    def __call__(self, t):
        return self.matrix


class TestDeviceParams:
    """Test device parameter helpers."""

    def test_adiabatic_ratio(self, params):
        """Test the default 100 ns ramp is adiabatic."""
        assert params.adiabatic_ratio == pytest.approx(1 / (0.1 * TWO_PI * 200.0))
        assert params.is_adiabatic

    def test_fast_ramp_not_adiabatic(self, params):
        """Test a 1 ns ramp is flagged."""
        fast = params.model_copy(update={"tau_ad": 0.001})
        assert not fast.is_adiabatic

    def test_per_qubit_coupling(self, params):
        """Test per-qubit couplings fall back to g."""
        custom = params.model_copy(update={"g_k": (TWO_PI * 150.0,)})
        assert custom.coupling(0) == pytest.approx(TWO_PI * 150.0)
        assert custom.coupling(2) == pytest.approx(params.g)


class TestDressedLevels:
    """Test dressed energies and states."""

    def test_dressed_energies(self, params):
        """Test E_{1,+} = omega_A + g and E_{4,-} = 4 omega_A - 2 g."""
        assert dressed_energy(0, "ground", params) == 0.0
        assert dressed_energy(1, "+", params) == pytest.approx(params.omega_A + params.g)
        assert dressed_energy(4, "-", params) == pytest.approx(4 * params.omega_A - 2 * params.g)

    def test_ground_has_no_branch(self, params):
        """Test m = 0 with a sign."""
        with pytest.raises(PreconditionError):
            dressed_energy(0, "+", params)
        with pytest.raises(PreconditionError):
            dressed_energy(2, "ground", params)

    def test_dressed_state_amplitudes(self):
        """Test (|1,0> + |0,1>)/sqrt 2."""
        state = dressed_state(1, "+", pair_space(4))
        assert state.amplitudes[2] == pytest.approx(1 / math.sqrt(2))
        assert state.amplitudes[1] == pytest.approx(1 / math.sqrt(2))

    def test_basis_diagonalizes_hamiltonian(self, params):
        """Test every dressed vector is an eigenvector with its listed energy."""
        basis = DressedBasis(6, params)
        h = jaynes_cummings_hamiltonian(6, params)
        assert np.allclose(h @ basis.vectors, basis.vectors * basis.energies[None, :], atol=1e-7)
        assert np.allclose(basis.vectors.conj().T @ basis.vectors, np.eye(basis.dim))

    def test_relabel_is_permutation(self, params):
        """Test bare-to-dressed relabelling is a permutation."""
        p = DressedBasis(5, params).relabel
        assert np.allclose(p @ p.T, np.eye(10))
        assert sorted(np.argmax(p, axis=0)) == list(range(10))

    def test_edge_level(self, params):
        """Test the truncation edge |dim_A - 1, 1> keeps its bare energy."""
        basis = DressedBasis(4, params)
        j = basis.index(4, "edge")
        assert basis.energies[j] == pytest.approx(4 * params.omega_A)
        assert basis.vectors[7, j] == 1


class TestDressingMap:
    """Test the bare/dressed exchange."""

    def test_ideal_dressing(self, params):
        """Test |0,0> is fixed and |0,1> becomes (1,+)."""
        space = pair_space(4)
        ground = basis_state(space, [0, "0"])
        assert np.allclose(dressing_map(ground, 0, "bare_to_dressed", params=params).amplitudes, ground.amplitudes)
        excited = dressing_map(basis_state(space, [0, "1"]), 0, "bare_to_dressed", params=params)
        assert np.allclose(excited.amplitudes, dressed_state(1, "+", space).amplitudes)

    def test_ideal_dressing_is_involution(self, params):
        """Test dressing then undressing returns the input."""
        space = pair_space(5)
        amps = np.arange(1, space.dim + 1) * np.exp(1j * np.arange(space.dim))
        psi = StateVector.normalized(space, amps)
        out = dressing_map(dressing_map(psi, 0, "bare_to_dressed", params=params), 0, "dressed_to_bare", params=params)
        assert np.allclose(out.amplitudes, psi.amplitudes)

    def test_ramp_needs_parameters(self):
        """Test ramp mode without device parameters."""
        with pytest.raises(PreconditionError):
            dressing_map(basis_state(pair_space(3), [0, "1"]), 0, "bare_to_dressed", mode="ramp")

    @pytest.mark.integration
    def test_ramp_follows_upper_branch(self, params):
        """Test the tanh sweep from 1 GHz carries |0,1> into (1,+)."""
        assert params.delta_start == pytest.approx(TWO_PI * 1000.0)
        space = pair_space(4)
        out = dressing_map(basis_state(space, [0, "1"]), 0, "bare_to_dressed", mode="ramp", params=params)
        ideal = dressing_map(basis_state(space, [0, "1"]), 0, "bare_to_dressed", params=params)
        assert overlap_fidelity(out, ideal) >= 0.99

    @pytest.mark.integration
    def test_ramp_matches_ideal_exchange(self, params):
        """Test every column of the ramp, phases included, against the ideal map."""
        ramp_in, report = ramp_operator("in", params, 4)
        ideal = DressedBasis(4, params).dressing_unitary
        overlaps = np.einsum("ij,ij->j", ideal.conj(), ramp_in)
        assert np.all(np.abs(overlaps) ** 2 >= 0.99)
        assert np.allclose(np.angle(overlaps), 0.0, atol=1e-9)
        assert report.method == "expm"
        assert report.warnings == []

    @pytest.mark.integration
    def test_ramp_out_undoes_ramp_in(self, params):
        """Test the mirrored sweep returns every bare level."""
        ramp_in, _ = ramp_operator("in", params, 4)
        ramp_out, _ = ramp_operator("out", params, 4)
        assert np.all(np.abs(np.diag(ramp_out @ ramp_in)) ** 2 >= 0.98)

    def test_detuned_frame(self, params):
        """Test the idle frame diagonalizes the detuned pair and tends to bare labels."""
        frame = detuned_frame(params, 5)
        h = RampHamiltonian("in", params, 5)(0.0)
        rotated = frame.conj().T @ h @ frame
        assert np.allclose(rotated, np.diag(np.diag(rotated)), atol=1e-8)
        assert np.allclose(frame.conj().T @ frame, np.eye(10))
        far = detuned_frame(params, 5, detuning=TWO_PI * 1e7)
        assert np.allclose(far, np.eye(10), atol=1e-4)


class TestInteractionHamiltonian:
    """Test the interaction-picture drive."""

    @pytest.fixture
    def drive(self, params, omega):
        basis = DressedBasis(6, params)
        pulse = synthesize_photon_preserving_drive(occupied_photon_numbers(1, 0), omega, params)
        return InteractionHamiltonian(pulse, basis), basis

    def test_hermitian(self, drive):
        """Test H_I(t) is Hermitian."""
        h, _ = drive
        for t in (0.0, 0.37, 1.9):
            m = h(t)
            assert np.allclose(m, m.conj().T)

    def test_rwa_couplings_match_chain(self, drive, omega):
        """Test the averaged couplings equal the three-node perfect chain."""
        h, basis = drive
        expected = perfect_chain_couplings(3, omega)
        first = h.rwa_coupling(basis.index(2, "+"), basis.index(1, "+"))
        second = h.rwa_coupling(basis.index(2, "+"), basis.index(1, "-"))
        assert abs(first) == pytest.approx(expected[0])
        assert abs(second) == pytest.approx(expected[1])

    def test_functional_form(self, params, omega):
        """Test the one-shot helper evaluates the same operator."""
        basis = DressedBasis(6, params)
        pulse = synthesize_photon_preserving_drive(occupied_photon_numbers(1, 0), omega, params)
        for t in (0.0, 0.81):
            expected = InteractionHamiltonian(pulse, basis)(t)
            assert np.allclose(interaction_hamiltonian(t, pulse, basis), expected)

    def test_zero_drive(self, params, omega):
        """Test a zero-amplitude pulse gives H_I = 0."""
        pulse = synthesize_photon_preserving_drive(occupied_photon_numbers(1, 0), omega, params)
        silent = pulse.model_copy(
            update={"components": tuple(c.model_copy(update={"amplitude": 0.0}) for c in pulse.components)}
        )
        h = InteractionHamiltonian(silent, DressedBasis(4, params))
        assert np.allclose(h(0.3), 0)


class TestPropagation:
    """Test the integrators."""

    @pytest.fixture
    def uniform(self):
        space = CompositeSpace.of(FockSpace(dim=3))
        return StateVector(space=space, amplitudes=np.ones(3) / math.sqrt(3))

    def test_zero_hamiltonian(self, uniform):
        """Test H = 0 leaves the state unchanged."""
        out, report = propagate(uniform, ConstantHamiltonian(np.zeros((3, 3))), 1.0, PropagationConfig())
        assert np.allclose(out.amplitudes, uniform.amplitudes)
        assert report.norm_drift < 1e-12

    def test_diagonal_phases(self, uniform):
        """Test exp(-i E t) on a diagonal generator."""
        energies = np.array([1.0, 2.0, 3.0])
        out, _ = propagate(uniform, ConstantHamiltonian(np.diag(energies)), 0.7, PropagationConfig())
        expected = np.exp(-1j * energies * 0.7) / math.sqrt(3)
        assert np.allclose(out.amplitudes, expected, atol=1e-7)

    def test_default_step(self):
        """Test the derived step is 1/(50 w_max)."""
        config = PropagationConfig()
        assert config.method == "rk4"
        assert config.max_step(10.0) == pytest.approx(0.002)
        assert config.resolve_step(10.0, 2.0) == pytest.approx(0.002)
        assert PropagationConfig(step_scale=0.5).resolve_step(10.0, 2.0) == pytest.approx(0.001)

    def test_rk4_holds_norm_at_default_step(self, uniform):
        """Test RK4 stays inside 1e-9 per us and matches the exact phases."""
        energies = np.array([-5.0, 0.0, 5.0])
        out, report = propagate(uniform, ConstantHamiltonian(np.diag(energies)), 2.0, PropagationConfig())
        assert report.method == "rk4"
        assert report.norm_drift < 2e-9
        assert np.allclose(out.amplitudes, np.exp(-1j * energies * 2.0) / math.sqrt(3), atol=1e-8)

    @pytest.mark.integration
    def test_rk4_agrees_with_expm_on_drive(self, params, omega):
        """Test both schemes give the same interaction-picture propagator."""
        pulse = synthesize_photon_preserving_drive(occupied_photon_numbers(1, 0), omega, params)
        source = InteractionHamiltonian(pulse, DressedBasis(6, params))
        rk4 = evolve_operator(source, 0.02, PropagationConfig())
        expm = evolve_operator(source, 0.02, PropagationConfig(method="expm"))
        assert rk4.report.norm_drift < 1e-9
        assert np.allclose(rk4.columns[-1], expm.columns[-1], atol=1e-7)

    def test_drift_raises(self, uniform):
        """Test the norm check stops an integration whose declared frequency is too low."""
        with pytest.raises(IntegrationError):
            propagate(uniform, Understated(np.diag([0.0, 40.0, -40.0])), 1.0, PropagationConfig())

    def test_step_above_limit(self, uniform):
        """Test a fixed step coarser than the resolution limit."""
        h = ConstantHamiltonian(np.diag([0.0, 10.0, 20.0]))
        with pytest.raises(PreconditionError, match="resolution limit"):
            propagate(uniform, h, 1.0, PropagationConfig(step=0.1))

    def test_lab_frame_rabi_inversion(self):
        """Test a resonant pi pulse with counter-rotating terms."""
        source = LabFrameRabi(splitting=1000.0, rabi=1.0)
        space = CompositeSpace.of(FockSpace(dim=2))
        out, report = propagate(basis_state(space, [0]), source, math.pi, PropagationConfig(method="expm"))
        assert abs(out.amplitudes[1]) ** 2 > 1 - 1e-3
        assert report.method == "expm"

    def test_convergence_check(self):
        """Test the half-step comparison is reported."""
        h = ConstantHamiltonian(np.diag([0.0, 1.0]))
        traj = evolve_operator(h, 1.0, PropagationConfig(convergence_check=True))
        assert traj.report.convergence_overlap == pytest.approx(1.0)

    def test_sample_times_validated(self):
        """Test sample times must span the duration."""
        h = ConstantHamiltonian(np.diag([0.0, 1.0]))
        with pytest.raises(PreconditionError):
            evolve_operator(h, 1.0, PropagationConfig(), sample_times=[0.0, 0.5])
