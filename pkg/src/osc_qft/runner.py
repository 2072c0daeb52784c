"""Scenario pipelines behind the command line.

Every command builds its inputs from a ScenarioConfig, runs one module
pipeline, writes CSV/JSON artifacts into a fresh run directory and returns
the RunRecord that is also stored as ``manifest.json``.
"""

import math
import platform
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
import pydantic
import scipy
import structlog

from . import __version__
from .artifacts import relative_outputs, run_directory, write_csv, write_json, write_sweep
from .config import ScenarioConfig
from .error_models import (
    aggregate_energy_fidelity,
    coherence_budget,
    energy_fidelity,
    exact_jitter_coefficient,
    monte_carlo_energy,
    monte_carlo_jitter,
    transfer_fidelity_jitter,
    uniform_decomposition,
    uniform_jitter_approx,
)
from .exceptions import OscQFTError
from .hilbert import StateVector, align_phase, overlap_fidelity, project, tensor
from .kerr import (
    dft_oracle,
    physical_disentangle,
    prepare_uniform_B,
    qft_duration,
    run_qft,
    wigner_snapshots,
)
from .models import MonteCarloSummary, QftRecord, RunRecord, StepReport, SweepRow
from .phase_estimation import PhaseScenario, closed_form_distribution, resource_counts, run_phase_estimation
from .transfer import (
    ProtocolSchedule,
    TransferPlan,
    TransferSimulator,
    build_plan,
    transfer_input,
    transfer_target,
)

logger = structlog.get_logger(__name__)

MC_ENERGY_NODES = 4
MC_JITTER_AMPLITUDES = (1 / math.sqrt(2), 0.0, 1 / math.sqrt(2), 0.0)


def _versions() -> Dict[str, str]:
    return {
        "osc_qft": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pydantic": pydantic.VERSION,
        "python": platform.python_version(),
    }


def _now() -> datetime:
    return datetime.now(timezone.utc)


def _mc_jitter_worker(config_data: Dict[str, Any], ratio: float, seed: int) -> MonteCarloSummary:
    """Process-pool entry point: one Monte-Carlo point on a two-qubit plan."""
    config = ScenarioConfig.model_validate(config_data)
    omega = config.drive_omegas()[0]
    plan = build_plan(
        2,
        omega,
        config.device_params(),
        config.protocol.dressing,
        config.protocol.fock_pad,
        config.protocol.guard_band,
    )
    delta_t = ratio * plan.steps[0].pulse.tau_map
    return monte_carlo_jitter(
        plan,
        delta_t,
        config.errors.repetitions,
        seed=seed,
        amplitudes=MC_JITTER_AMPLITUDES,
        config=config.propagation_config(),
    )


class ScenarioRunner:
    """Runs the simulator pipelines for one configuration."""

    def __init__(self, config: ScenarioConfig, out_root: Optional[Path] = None):
        """Initialize the runner.

        Args:
            config: Resolved scenario configuration
            out_root: Directory receiving run folders (defaults to ``output.root``)
        """
        self.config = config
        self.out_root = Path(out_root or config.output.root)
        self._simulator: Optional[TransferSimulator] = None

    # shared pieces

    def plan(self) -> TransferPlan:
        p = self.config.protocol
        return build_plan(
            p.n,
            self.config.drive_omegas(),
            self.config.device_params(),
            p.dressing,
            p.fock_pad,
            p.guard_band,
        )

    def simulator(self) -> TransferSimulator:
        if self._simulator is None:
            self._simulator = TransferSimulator(
                self.plan(), self.config.propagation_config(), self.config.protocol.backend
            )
        return self._simulator

    def _transfer(self) -> Tuple[StateVector, List[StepReport]]:
        sim = self.simulator()
        c = self.config.initial_amplitudes()
        return sim.run(transfer_input(c, sim.plan.n, sim.dim_A))

    def _resonator_state(self) -> Tuple[StateVector, float]:
        """A after the transfer, conditioned on the register reading |0...0>."""
        final, _ = self._transfer()
        n = self.config.protocol.n
        ground = np.zeros(2**n, dtype=complex)
        ground[0] = 1.0
        conditioned = project(final, "q", ground)
        if conditioned.state is None:
            raise OscQFTError("Register never returned to the ground state after the transfer")
        return conditioned.state, conditioned.probability

    def _execute(self, command: str, body: Callable[[Path], Dict[str, Any]]) -> RunRecord:
        started = _now()
        run_dir = run_directory(self.out_root, command, self.config.seed)
        log = logger.bind(command=command, run_dir=str(run_dir))
        log.info("run_started", seed=self.config.seed)
        try:
            reports = body(run_dir)
        except OscQFTError:
            log.error("run_failed")
            raise
        except Exception as e:
            log.error("run_failed", error=str(e))
            raise OscQFTError(f"{command} failed: {e}")
        write_json(run_dir / "config.json", self.config.echo())
        outputs = relative_outputs(run_dir, (p for p in run_dir.iterdir() if p.is_file()))
        record = RunRecord(
            command=command,
            seed=self.config.seed,
            config=self.config.echo(),
            reports=reports,
            outputs=[*outputs, "manifest.json"],
            versions=_versions(),
            started_at=started,
            finished_at=_now(),
        )
        write_json(run_dir / "manifest.json", record)
        log.info("run_finished", outputs=len(record.outputs))
        return record

    # commands

    def transfer(self) -> RunRecord:
        def body(run_dir: Path) -> Dict[str, Any]:
            sim = self.simulator()
            c = self.config.initial_amplitudes()
            final, reports = self._transfer()
            fidelity = overlap_fidelity(transfer_target(c, sim.plan.n, sim.dim_A), final)
            rows = [
                (r.k, t, label, p)
                for r in reports
                for label, series in sorted(r.populations.items())
                for t, p in zip(r.times_us, series)
            ]
            write_csv(run_dir / "populations.csv", ["k", "t_us", "basis_label", "population"], rows)
            write_csv(
                run_dir / "steps.csv",
                ["k", "omega_mhz", "duration_us", "fidelity", "raw_fidelity", "leakage", "qubit_excitation"],
                [
                    (r.k, r.omega_mhz, r.duration_us, r.fidelity, r.raw_fidelity, r.leakage, r.qubit_excitation)
                    for r in reports
                ],
            )
            summary = {
                "n": sim.plan.n,
                "dim_A": sim.dim_A,
                "tau_1_us": sim.plan.tau_1,
                "target_fidelity": fidelity,
                "steps": [
                    r.model_dump(
                        mode="json",
                        exclude={"populations": True, "times_us": True, "propagation": {"wall_clock_s"}},
                    )
                    for r in reports
                ],
            }
            write_json(run_dir / "transfer.json", summary)
            return {
                "target_fidelity": fidelity,
                "step_fidelities": {str(r.k): r.fidelity for r in reports},
                "wall_clock_s": sum(r.propagation.wall_clock_s for r in reports if r.propagation),
            }

        return self._execute("transfer", body)

    def qft(self) -> RunRecord:
        def body(run_dir: Path) -> Dict[str, Any]:
            n = self.config.protocol.n
            q = 2**n
            kerr = self.config.kerr_config()
            a_state, register_ground = self._resonator_state()
            result = run_qft(a_state, kerr, q)
            vacuum: Optional[float] = None
            b_state, probability = result.b_state, result.probability
            if self.config.protocol.disentangle == "physical":
                outcome = physical_disentangle(result.joint, self.simulator())
                b_state, probability, vacuum = outcome.b_state, outcome.probability, outcome.vacuum_population
            if b_state is None:
                raise OscQFTError("Post-selection returned an impossible outcome")
            oracle = dft_oracle(self.config.initial_amplitudes(), kerr.direction)
            amps = align_phase(b_state.amplitudes[:q])
            oracle_fidelity = float(min(1.0, abs(np.vdot(oracle, b_state.amplitudes[:q])) ** 2))
            tau_2 = qft_duration(q, kerr)
            record = QftRecord(
                q=q,
                direction=kerr.direction,
                tau_2_us=tau_2,
                success_probability=min(1.0, probability),
                oracle_fidelity=oracle_fidelity,
                amplitudes=[(float(a.real), float(a.imag)) for a in amps],
                vacuum_population=vacuum,
            )
            aligned_oracle = align_phase(oracle)
            write_csv(
                run_dir / "qft_amplitudes.csv",
                ["fock_index", "re", "im", "oracle_re", "oracle_im"],
                [
                    (j, float(a.real), float(a.imag), float(o.real), float(o.imag))
                    for j, (a, o) in enumerate(zip(amps, aligned_oracle))
                ],
            )
            schedule = ProtocolSchedule(
                tau_1=self.simulator().plan.tau_1, tau_2=tau_2, tau_ad=self.config.device_params().tau_ad
            )
            write_json(run_dir / "qft.json", {"result": record, "schedule": schedule})
            return {
                "oracle_fidelity": oracle_fidelity,
                "success_probability": probability,
                "register_ground_population": register_ground,
            }

        return self._execute("qft", body)

    def phase(self) -> RunRecord:
        def body(run_dir: Path) -> Dict[str, Any]:
            p = self.config.protocol
            physical = p.disentangle == "physical" or p.backend == "dynamical"
            scenario = PhaseScenario(
                theta=2 * math.pi * self.config.phase.theta_turns,
                n=p.n,
                mode="physical" if physical else "ideal",
                trials=self.config.phase.trials,
            )
            estimate = run_phase_estimation(
                scenario,
                self.config.kerr_config("inverse"),
                self.simulator() if physical else None,
                seed=self.config.seed,
            )
            closed = closed_form_distribution(scenario.theta, scenario.q)
            counts = estimate.counts or [0] * scenario.q
            write_csv(
                run_dir / "phase_distribution.csv",
                ["photon_number", "probability", "closed_form", "counts"],
                [(j, estimate.distribution[j], float(closed[j]), counts[j]) for j in range(scenario.q)],
            )
            write_json(run_dir / "phase.json", estimate)
            return {"outcome": estimate.outcome, "error_rad": estimate.error, "mode": estimate.mode}

        return self._execute("phase", body)

    def errors(self, workers: int = 1) -> RunRecord:
        def body(run_dir: Path) -> Dict[str, Any]:
            e = self.config.errors
            n = self.config.protocol.n
            t0 = math.pi / self.config.drive_omegas()[0]
            uniform = uniform_decomposition(n)
            coefficient = exact_jitter_coefficient(n)
            jitter_rows: List[SweepRow] = []
            jitter_extra: List[Tuple[Optional[float], float]] = []
            for x in e.jitter_ratios:
                dt = x * t0
                jitter_rows.append(
                    SweepRow(
                        parameter=x,
                        analytic=transfer_fidelity_jitter(uniform, dt, t0, "printed"),
                        alternate=transfer_fidelity_jitter(uniform, dt, t0, "amplitude"),
                    )
                )
                jitter_extra.append(
                    (uniform_jitter_approx(n, dt, t0) if abs(x) <= 0.05 else None, 1 - coefficient * x**2)
                )
            write_sweep(
                run_dir / "jitter_sweep.csv", jitter_rows, ["printed_approx", "quadratic_exact"], jitter_extra
            )

            energy_rows: List[SweepRow] = []
            energy_extra: List[Tuple[float, float]] = []
            for i, x in enumerate(e.energy_products):
                delta_e = x / t0
                exact, approx = aggregate_energy_fidelity(n, delta_e, t0)
                mc = monte_carlo_energy(
                    MC_ENERGY_NODES, delta_e, math.pi / t0, e.repetitions, seed=self.config.seed + i
                )
                energy_rows.append(
                    SweepRow(
                        parameter=x,
                        analytic=energy_fidelity(MC_ENERGY_NODES, delta_e, t0),
                        simulated=mc.mean_fidelity,
                    )
                )
                energy_extra.append((exact, approx))
            write_sweep(
                run_dir / "energy_sweep.csv", energy_rows, ["register_exact", "register_approx"], energy_extra
            )

            budgets = [coherence_budget(k) for k in e.budget_n]
            write_csv(
                run_dir / "coherence_budget.csv",
                [
                    "n",
                    "q",
                    "tau1_us",
                    "tau2_us",
                    "qubit_lifetime_us",
                    "photon_lifetime_us",
                    "kerr_photon_lifetime_us",
                    "feasible",
                ],
                [
                    (
                        b.n,
                        b.q,
                        b.tau1_us,
                        b.tau2_us,
                        b.qubit_lifetime_us,
                        b.photon_lifetime_us,
                        b.kerr_photon_lifetime_us,
                        b.feasible,
                    )
                    for b in budgets
                ],
            )
            reports: Dict[str, Any] = {"exact_jitter_coefficient": coefficient}
            if e.monte_carlo:
                summaries = self._monte_carlo(workers)
                mc_rows = [
                    SweepRow(
                        parameter=x,
                        analytic=s.predicted_infidelity,
                        simulated=s.excess_infidelity,
                        alternate=s.printed_infidelity,
                    )
                    for x, s in zip(e.mc_ratios, summaries)
                ]
                write_sweep(
                    run_dir / "mc_jitter.csv",
                    mc_rows,
                    ["repetitions", "mean_fidelity", "std_fidelity"],
                    [(s.repetitions, s.mean_fidelity, s.std_fidelity) for s in summaries],
                )
                reports["monte_carlo_points"] = len(summaries)
                reports["max_relative_error"] = max(
                    (r.relative_error for r in mc_rows if r.relative_error is not None), default=None
                )
            return reports

        return self._execute("errors", body)

    def _monte_carlo(self, workers: int) -> List[MonteCarloSummary]:
        ratios = self.config.errors.mc_ratios
        seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(self.config.seed).spawn(len(ratios))]
        data = self.config.echo()
        if workers <= 1:
            return [_mc_jitter_worker(data, x, s) for x, s in zip(ratios, seeds)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_mc_jitter_worker, [data] * len(ratios), ratios, seeds))

    def resources(self, n_max: Optional[int] = None) -> RunRecord:
        def body(run_dir: Path) -> Dict[str, Any]:
            top = n_max or self.config.output.resources_max_n
            rows = [resource_counts(n) for n in range(1, top + 1)]
            write_csv(
                run_dir / "resources.csv",
                ["n", "conventional_ops", "recycling_ops", "oscillator_ops"],
                [(r.n, r.conventional, r.recycling, r.oscillator) for r in rows],
            )
            write_json(run_dir / "resources.json", rows)
            return {"n_max": top}

        return self._execute("resources", body)

    def wigner(self) -> RunRecord:
        def body(run_dir: Path) -> Dict[str, Any]:
            q = 2**self.config.protocol.n
            kerr = self.config.kerr_config()
            tau_2 = qft_duration(q, kerr)
            a_state, _ = self._resonator_state()
            joint = tensor(a_state, prepare_uniform_B(q))
            snapshots = wigner_snapshots(joint, kerr.chi, tau_2)
            summary = []
            for i, (t, grid) in enumerate(snapshots):
                rows = [
                    (x, p, grid.values[ip][ix])
                    for ip, p in enumerate(grid.p)
                    for ix, x in enumerate(grid.x)
                ]
                write_csv(run_dir / f"wigner_{i}.csv", ["x", "p", "W"], rows)
                summary.append(
                    {"t_us": t, "integral": grid.integral, "truncated": grid.truncated, "file": f"wigner_{i}.csv"}
                )
            write_json(run_dir / "wigner.json", {"tau_2_us": tau_2, "snapshots": summary})
            return {"integrals": [s["integral"] for s in summary]}

        return self._execute("wigner", body)


def create_runner(config: ScenarioConfig, out_root: Optional[Path] = None) -> ScenarioRunner:
    """Create a runner for one configuration."""
    return ScenarioRunner(config, out_root)
