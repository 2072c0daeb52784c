"""Test transfer module."""

import math

import numpy as np
import pytest

from osc_qft.dynamics import DeviceParams, PropagationConfig
from osc_qft.exceptions import DimensionError, PreconditionError, SupportError
from osc_qft.hilbert import basis_state, overlap_fidelity
from osc_qft.transfer import (
    ProtocolSchedule,
    TransferSimulator,
    bits_to_fock,
    build_plan,
    execute_transfer,
    ideal_step_unitary,
    inverse_transfer,
    register_amplitudes,
    register_space,
    transfer_input,
    transfer_target,
)

TWO_PI = 2 * math.pi


def basis_amplitudes(n, value):
    c = np.zeros(2**n, dtype=complex)
    c[value] = 1.0
    return c


@pytest.fixture
def plan3(params, omega):
    return build_plan(3, omega, params)


@pytest.fixture
def ideal3(plan3):
    return TransferSimulator(plan3, backend="ideal")


class TestPlan:
    """Test plan construction."""

    def test_step_order_and_windows(self, plan3, omega):
        """Test steps run k = n-1 ... 0 with pi/Omega windows."""
        assert [s.k for s in plan3.steps] == [2, 1, 0]
        for s in plan3.steps:
            assert s.pulse.tau_map == pytest.approx(math.pi / omega)
        assert plan3.dim_A == 12
        assert plan3.tau_1 == pytest.approx(3 * (math.pi / omega + 2 * 0.1))

    def test_per_step_scales(self, params):
        """Test per-step drive scales."""
        plan = build_plan(3, [TWO_PI * 5, TWO_PI * 5, TWO_PI * 0.2], params)
        assert [s.omega for s in plan.steps] == pytest.approx([TWO_PI * 5, TWO_PI * 5, TWO_PI * 0.2])
        with pytest.raises(PreconditionError):
            build_plan(3, [TWO_PI * 5, TWO_PI * 0.2], params)

    def test_with_offsets(self, plan3):
        """Test per-step timing offsets."""
        shifted = plan3.with_offsets({1: 0.05})
        assert shifted.step(1).pulse.duration == pytest.approx(plan3.step(1).pulse.tau_map + 0.05)
        assert shifted.step(2).pulse.duration == pytest.approx(plan3.step(2).pulse.tau_map)

    def test_missing_step(self, plan3):
        """Test lookups outside the schedule."""
        with pytest.raises(DimensionError):
            plan3.step(3)

    def test_schedule_total(self):
        """Test 2 tau_1 + tau_2 + tau_3."""
        schedule = ProtocolSchedule(tau_1=8.1, tau_2=2.5, tau_3=1.0, tau_ad=0.1)
        assert schedule.total == pytest.approx(19.7)


class TestBasisHelpers:
    """Test register and Fock helpers."""

    @pytest.mark.parametrize("bits, m", [("000", 0), ("110", 6), ("111", 7), ("001", 1)])
    def test_bits_to_fock(self, bits, m):
        """Test photon number sum b_k 2^k."""
        assert bits_to_fock(bits, 3) == m

    def test_bits_to_fock_invalid(self):
        """Test malformed strings."""
        with pytest.raises(DimensionError):
            bits_to_fock("012")
        with pytest.raises(DimensionError):
            bits_to_fock("01", 3)

    def test_register_amplitudes(self):
        """Test normalization of a bitstring mapping."""
        c = register_amplitudes({"00": 1.0, "11": 1j}, 2)
        assert c[0] == pytest.approx(1 / math.sqrt(2))
        assert c[3] == pytest.approx(1j / math.sqrt(2))
        with pytest.raises(PreconditionError):
            register_amplitudes({"00": 0.0}, 2)

    def test_transfer_target_layout(self):
        """Test the target puts c_m on |m>_A|000>."""
        target = transfer_target(basis_amplitudes(3, 5), 3, 12)
        space = register_space(3, 12)
        assert target.amplitudes[space.index([5, "000"])] == 1


class TestIdealStep:
    """Test the exact step permutation."""

    def test_k_two_moves_excitation(self):
        """Test |0>_A|1> -> |4>_A|0>."""
        u = ideal_step_unitary(2, 3)
        assert np.allclose(u @ np.eye(16)[1], np.eye(16)[8])

    def test_k_one_from_four_photons(self):
        """Test |4>_A|1> -> |6>_A|0>."""
        u = ideal_step_unitary(1, 3)
        assert np.allclose(u @ np.eye(16)[9], np.eye(16)[12])

    def test_unitary(self):
        """Test the permutation is unitary."""
        u = ideal_step_unitary(0, 3, 12)
        assert np.allclose(u @ u.conj().T, np.eye(24))

    def test_truncation_too_small(self):
        """Test dim_A below 2^n."""
        with pytest.raises(DimensionError):
            ideal_step_unitary(0, 3, 6)


class TestIdealTransfer:
    """Test the ideal backend end to end."""

    @pytest.mark.parametrize("value", range(8))
    def test_basis_strings(self, ideal3, value):
        """Test every basis string lands on its Fock state."""
        c = basis_amplitudes(3, value)
        final, reports = ideal3.run(transfer_input(c, 3, 12))
        assert overlap_fidelity(final, transfer_target(c, 3, 12)) == pytest.approx(1.0, abs=1e-12)
        assert [r.k for r in reports] == [2, 1, 0]

    def test_ghz_pair(self, ideal3):
        """Test (|000> + |111>)/sqrt 2 -> (|0> + |7>)/sqrt 2 x |000>."""
        c = register_amplitudes({"000": 1.0, "111": 1.0}, 3)
        final, reports = ideal3.run(transfer_input(c, 3, 12))
        assert overlap_fidelity(final, transfer_target(c, 3, 12)) == pytest.approx(1.0)
        assert all(r.fidelity == pytest.approx(1.0) for r in reports)
        assert all(r.qubit_excitation == pytest.approx(0.0) for r in reports)

    def test_linearity(self, ideal3):
        """Test the transfer of a superposition is the superposition of transfers."""
        rng = np.random.default_rng(11)
        c = rng.normal(size=8) + 1j * rng.normal(size=8)
        c /= np.linalg.norm(c)
        final, _ = ideal3.run(transfer_input(c, 3, 12))
        assert np.allclose(final.amplitudes, transfer_target(c, 3, 12).amplitudes)

    def test_vacuum_fixed_point(self, ideal3):
        """Test |0>_A|000> is unchanged."""
        start = basis_state(register_space(3, 12), [0, "000"])
        final, _ = ideal3.run(start)
        assert np.allclose(final.amplitudes, start.amplitudes)

    def test_support_violation(self, ideal3):
        """Test a populated resonator before step n-1."""
        start = basis_state(register_space(3, 12), [1, "000"])
        with pytest.raises(SupportError):
            ideal3.run(start)

    def test_population_series(self, ideal3):
        """Test the population series of the moved amplitude."""
        _, reports = ideal3.run(transfer_input(basis_amplitudes(3, 4), 3, 12))
        first = reports[0]
        assert first.times_us[0] == 0.0
        assert first.populations["A=0|q=100"] == [1.0, 0.0]
        assert first.populations["A=4|q=000"] == [0.0, 1.0]

    def test_execute_transfer(self, plan3):
        """Test the module-level entry point."""
        c = basis_amplitudes(3, 3)
        final, _ = execute_transfer(transfer_input(c, 3, 12), plan3, backend="ideal")
        assert overlap_fidelity(final, transfer_target(c, 3, 12)) == pytest.approx(1.0)


class TestIdealInverse:
    """Test both inverse schemes on the ideal backend."""

    @pytest.mark.parametrize("mode", ["recorded-adjoint", "physical"])
    def test_round_trip(self, ideal3, mode):
        """Test forward then inverse recovers the register state."""
        rng = np.random.default_rng(5)
        c = rng.normal(size=8) + 1j * rng.normal(size=8)
        start = transfer_input(c, 3, 12)
        forward, _ = ideal3.run(start)
        back, report = ideal3.inverse(forward, mode)
        assert overlap_fidelity(back, start) == pytest.approx(1.0)
        assert report.max_residual_phase == pytest.approx(0.0, abs=1e-12)
        assert set(report.residual_phases) == {format(v, "03b") for v in range(8)}

    def test_inverse_transfer_entry_point(self, plan3):
        """Test the module-level inverse."""
        target = transfer_target(basis_amplitudes(3, 6), 3, 12)
        back, report = inverse_transfer(target, plan3, backend="ideal")
        assert overlap_fidelity(back, transfer_input(basis_amplitudes(3, 6), 3, 12)) == pytest.approx(1.0)
        assert report.mode == "recorded-adjoint"


@pytest.fixture(scope="module")
def dynamical1():
    """One-qubit dynamical transfer at Omega/2pi = 1 MHz on a 2 GHz resonator."""
    params = DeviceParams(omega_A=TWO_PI * 2000.0, omega_B=TWO_PI * 2500.0, g=TWO_PI * 200.0)
    plan = build_plan(1, TWO_PI * 1.0, params)
    return TransferSimulator(plan, PropagationConfig(samples=50), backend="dynamical")


@pytest.mark.integration
class TestDynamicalTransfer:
    """Test the integrated one-qubit step."""

    def test_step_unitary(self, dynamical1):
        """Test the propagated step is unitary."""
        u = dynamical1.step_operator(0).unitary
        assert np.allclose(u @ u.conj().T, np.eye(u.shape[0]), atol=1e-8)

    def test_superposition_transfer(self, dynamical1):
        """Test (|0> + |1>)/sqrt 2 is moved into A."""
        c = np.array([1.0, 1.0]) / math.sqrt(2)
        start = transfer_input(c, 1, dynamical1.dim_A)
        final, (report,) = dynamical1.run(start)
        assert report.fidelity >= 0.99
        assert report.leakage <= 1e-6
        assert report.qubit_excitation <= 1 - report.fidelity + 1e-9
        assert report.propagation is not None
        assert overlap_fidelity(final, transfer_target(c, 1, dynamical1.dim_A)) >= 0.99

    def test_recorded_adjoint_is_exact(self, dynamical1):
        """Test the recorded adjoint undoes the corrected step."""
        c = np.array([0.6, 0.8j])
        start = transfer_input(c, 1, dynamical1.dim_A)
        forward, _ = dynamical1.run(start)
        back, _ = dynamical1.inverse(forward, "recorded-adjoint")
        assert overlap_fidelity(back, start) == pytest.approx(1.0, abs=1e-8)

    def test_phase_frame_covers_levels(self, dynamical1):
        """Test the frame lists the untouched and transferred level."""
        phases = dynamical1.phase_frame()[0]
        assert set(phases.untouched) == {0}
        assert set(phases.transferred) == {1}


GHZ3 = np.array([1, 0, 0, 0, 0, 0, 0, 1], dtype=complex) / math.sqrt(2)


@pytest.fixture(scope="module")
def device6():
    """g/2pi = 200 MHz on a 6 GHz resonator, the scenario defaults."""
    return DeviceParams(omega_A=TWO_PI * 6000.0, omega_B=TWO_PI * 7000.0, g=TWO_PI * 200.0)


def step_fidelities(plan, config, steps=None):
    sim = TransferSimulator(plan, config, backend="dynamical")
    final, reports = sim.run(transfer_input(GHZ3, plan.n, sim.dim_A), steps=steps)
    return final, {r.k: r.fidelity for r in reports}


@pytest.mark.slow
class TestThreeQubitTransfer:
    """Test the integrated three-qubit transfer of (|000> + |111>)/sqrt 2."""

    def test_step_fidelities_at_200_khz(self, device6):
        """Test steps k = 2, 1, 0 at Omega/2pi = 200 kHz."""
        plan = build_plan(3, TWO_PI * 0.2, device6)
        final, fidelities = step_fidelities(plan, PropagationConfig(samples=20))
        assert fidelities[2] == pytest.approx(1.0, abs=5e-4)
        assert fidelities[1] == pytest.approx(1.0, abs=5e-4)
        assert fidelities[0] == pytest.approx(0.9992, abs=5e-4)
        assert overlap_fidelity(final, transfer_target(GHZ3, 3, plan.dim_A)) >= 0.998

    def test_fast_steps_at_5_mhz(self, device6):
        """Test steps k = 2, 1 at Omega/2pi = 5 MHz and their half-step convergence."""
        plan = build_plan(3, [TWO_PI * 5.0, TWO_PI * 5.0, TWO_PI * 0.2], device6)
        _, coarse = step_fidelities(plan, PropagationConfig(samples=20), steps=[2, 1])
        _, fine = step_fidelities(plan, PropagationConfig(samples=20, step_scale=0.5), steps=[2, 1])
        assert coarse[2] == pytest.approx(0.9973, abs=2e-3)
        assert coarse[1] == pytest.approx(0.9993, abs=2e-3)
        for k in (2, 1):
            assert abs(coarse[k] - fine[k]) < 1e-4
