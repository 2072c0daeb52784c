"""Command line entry point for the oscillator QFT simulator."""

import logging
import sys
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, Optional

import structlog
import typer
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from .config import ScenarioConfig
from .exceptions import OscQFTError
from .models import RunRecord
from .runner import ScenarioRunner, create_runner

app = typer.Typer(name="osc-qft", help="Oscillator-based quantum Fourier transform simulator")
console = Console()


class Mode(str, Enum):
    ideal = "ideal"
    physical = "physical"


def setup_logging(level: str = "INFO") -> None:
    """Set up structlog with a level filter and console rendering on stderr."""
    numeric = logging.getLevelName(level.upper())
    if not isinstance(numeric, int):
        raise typer.BadParameter(f"Unknown log level '{level}'")
    structlog.configure(
        processors=[
            structlog.processors.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.dev.ConsoleRenderer(colors=False),
        ],
        wrapper_class=structlog.make_filtering_bound_logger(numeric),
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
        cache_logger_on_first_use=False,
    )


def _overrides(
    seed: Optional[int],
    mode: Optional[Mode],
    fock_pad: Optional[int],
    step_scale: Optional[float],
) -> Dict[str, Any]:
    out: Dict[str, Any] = {}
    if seed is not None:
        out["seed"] = seed
    if mode is not None:
        out["protocol__backend"] = "ideal" if mode is Mode.ideal else "dynamical"
        out["protocol__disentangle"] = mode.value
    if fock_pad is not None:
        out["protocol__fock_pad"] = fock_pad
    if step_scale is not None:
        out["protocol__step_scale"] = step_scale
    return out


def _run(
    command: Callable[[ScenarioRunner], RunRecord],
    config_path: Optional[Path],
    seed: Optional[int],
    mode: Optional[Mode],
    fock_pad: Optional[int],
    step_scale: Optional[float],
    out: Optional[Path],
    log_level: Optional[str],
) -> None:
    try:
        config = ScenarioConfig.load(config_path, **_overrides(seed, mode, fock_pad, step_scale))
        setup_logging(log_level or config.log_level)
        record = command(create_runner(config, out))
    except OscQFTError as e:
        console.print(f"[red]Error:[/red] {e}")
        raise typer.Exit(code=e.exit_code)
    _show(record)


def _show(record: RunRecord) -> None:
    table = Table(title=f"{record.command} (seed {record.seed})")
    table.add_column("Report")
    table.add_column("Value", justify="right")
    for key, value in sorted(record.reports.items()):
        table.add_row(key, f"{value:.6g}" if isinstance(value, float) else str(value))
    console.print(table)
    console.print(f"[dim]{len(record.outputs)} files written[/dim]")


ConfigOption = typer.Option(None, "--config", help="TOML or JSON scenario file")
SeedOption = typer.Option(None, "--seed", help="Random seed")
ModeOption = typer.Option(None, "--mode", help="ideal or physical execution")
PadOption = typer.Option(None, "--fock-pad", help="Extra Fock levels above 2^n")
ScaleOption = typer.Option(None, "--step-scale", help="Multiplier on the derived integrator step")
OutOption = typer.Option(None, "--out", help="Directory receiving run folders")
LevelOption = typer.Option(None, "--log-level", help="Logging level")


@app.command()
def transfer(
    config: Optional[Path] = ConfigOption,
    seed: Optional[int] = SeedOption,
    mode: Optional[Mode] = ModeOption,
    fock_pad: Optional[int] = PadOption,
    step_scale: Optional[float] = ScaleOption,
    out: Optional[Path] = OutOption,
    log_level: Optional[str] = LevelOption,
) -> None:
    """Transfer the configured register state into resonator A."""
    _run(ScenarioRunner.transfer, config, seed, mode, fock_pad, step_scale, out, log_level)


@app.command()
def qft(
    config: Optional[Path] = ConfigOption,
    seed: Optional[int] = SeedOption,
    mode: Optional[Mode] = ModeOption,
    fock_pad: Optional[int] = PadOption,
    step_scale: Optional[float] = ScaleOption,
    out: Optional[Path] = OutOption,
    log_level: Optional[str] = LevelOption,
) -> None:
    """Transfer, apply the Kerr transform and post-select resonator B."""
    _run(ScenarioRunner.qft, config, seed, mode, fock_pad, step_scale, out, log_level)


@app.command()
def phase(
    config: Optional[Path] = ConfigOption,
    seed: Optional[int] = SeedOption,
    mode: Optional[Mode] = ModeOption,
    fock_pad: Optional[int] = PadOption,
    step_scale: Optional[float] = ScaleOption,
    out: Optional[Path] = OutOption,
    log_level: Optional[str] = LevelOption,
) -> None:
    """Estimate the configured phase with the inverse oscillator transform."""
    _run(ScenarioRunner.phase, config, seed, mode, fock_pad, step_scale, out, log_level)


@app.command()
def errors(
    config: Optional[Path] = ConfigOption,
    seed: Optional[int] = SeedOption,
    mode: Optional[Mode] = ModeOption,
    fock_pad: Optional[int] = PadOption,
    step_scale: Optional[float] = ScaleOption,
    out: Optional[Path] = OutOption,
    log_level: Optional[str] = LevelOption,
    workers: int = typer.Option(1, "--workers", min=1, help="Processes for the Monte-Carlo points"),
) -> None:
    """Sweep the jitter and level-fluctuation models and the coherence budget."""
    _run(
        lambda runner: runner.errors(workers),
        config,
        seed,
        mode,
        fock_pad,
        step_scale,
        out,
        log_level,
    )


@app.command()
def resources(
    n_max: Optional[int] = typer.Option(None, "--n-max", min=1, help="Largest register size"),
    config: Optional[Path] = ConfigOption,
    out: Optional[Path] = OutOption,
    log_level: Optional[str] = LevelOption,
) -> None:
    """Tabulate operation counts of the three phase-estimation approaches."""
    _run(lambda runner: runner.resources(n_max), config, None, None, None, None, out, log_level)


@app.command()
def wigner(
    config: Optional[Path] = ConfigOption,
    seed: Optional[int] = SeedOption,
    mode: Optional[Mode] = ModeOption,
    fock_pad: Optional[int] = PadOption,
    step_scale: Optional[float] = ScaleOption,
    out: Optional[Path] = OutOption,
    log_level: Optional[str] = LevelOption,
) -> None:
    """Wigner grids of resonator B during the Kerr evolution."""
    _run(ScenarioRunner.wigner, config, seed, mode, fock_pad, step_scale, out, log_level)


@app.command()
def version() -> None:
    """Show version information."""
    from osc_qft import __version__

    console.print(f"Oscillator QFT simulator version: [green]{__version__}[/green]")


@app.command(name="config")
def show_config(
    config: Optional[Path] = ConfigOption,
) -> None:
    """Show the resolved configuration."""
    try:
        resolved = ScenarioConfig.load(config)
    except OscQFTError as e:
        console.print(f"[red]Error loading configuration: {e}[/red]")
        raise typer.Exit(code=e.exit_code)
    params = resolved.device_params()
    p = resolved.protocol
    console.print(
        Panel.fit(
            f"[bold]Device[/bold]\n\n"
            f"omega_A/2pi: {resolved.device.omega_a_mhz} MHz\n"
            f"omega_B/2pi: {resolved.device.omega_b_mhz} MHz\n"
            f"g/2pi: {resolved.device.coupling_mhz} MHz\n"
            f"chi/2pi: {resolved.kerr.chi_khz} kHz\n"
            f"Adiabatic: {params.is_adiabatic}\n\n"
            f"[bold]Protocol[/bold]\n\n"
            f"n: {p.n}\n"
            f"Omega/2pi: {p.omega_mhz} MHz\n"
            f"Dressing: {p.dressing}\n"
            f"Backend: {p.backend}\n"
            f"Disentangle: {p.disentangle}\n"
            f"Fock pad: {p.fock_pad}\n"
            f"Seed: {resolved.seed}",
            title="Configuration",
            border_style="blue",
        )
    )


def main() -> None:
    """Console-script entry point."""
    app()


if __name__ == "__main__":
    main()
