"""Command-line interface for raman-memory.

Each subcommand is an async handler that computes its tables from a RunConfig; `run` writes
them (CSV per table, or one JSON document with --json) and maps failures to exit codes.
Flags are stored under dotted destinations such as "modes.n" and become nested overrides of
the YAML configuration.
"""

import argparse
import asyncio
import json
import logging
from collections.abc import Awaitable, Callable, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from raman_memory import __version__
from raman_memory.config import MAX_WORKERS, RunConfig, load_run_config
from raman_memory.errors import EXIT_OK, DomainError, NumericalError, RamanMemoryError, create_error_report
from raman_memory.grid import make_grid
from raman_memory.kernels import g0_matrix, g1_matrix, kernel_table
from raman_memory.modematch import Wavepacket, control_table, predicted_efficiency, readin_table, shape_batch, simulate_readin
from raman_memory.modes import decompose, modes_table, singular_value_curve, singular_values_table
from raman_memory.outputs import Table, table_document, to_jsonable, write_json, write_table
from raman_memory.propagator import field_table
from raman_memory.readout import overlaps_table, retrieval_from_spin_wave, retrieval_map, retrieval_point, retrieval_table
from raman_memory.transverse import gaussian_waist_fit, paraxial_modes, transverse_tables
from raman_memory.verify import require_passed, run_verification

logger = logging.getLogger(__name__)

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


@dataclass
class CommandOutput:
    """Everything a subcommand produced.

    Attributes:
        command: Subcommand name
        tables: Result tables keyed by CSV file name
        summary: Scalar results echoed on stdout and stored in the JSON document
        reports: JSON documents written regardless of --json, keyed by file name
        failure: Error raised after the outputs have been written
    """

    command: str
    tables: dict[str, Table] = field(default_factory=dict)
    summary: dict[str, Any] = field(default_factory=dict)
    reports: dict[str, Any] = field(default_factory=dict)
    failure: RamanMemoryError | None = None


def _label(value: float) -> str:
    return f"{value:g}"


async def run_modes(config: RunConfig) -> CommandOutput:
    """Singular-value curve over the coupling sweep plus mode samples at selected couplings."""
    settings = config.modes
    output = CommandOutput("modes")
    rows = await singular_value_curve(settings.couplings.values(), settings.n_modes, settings.n, workers=MAX_WORKERS)
    output.tables["singular_values.csv"] = singular_values_table(rows)

    for c in settings.dump_couplings:
        decomp = await asyncio.to_thread(decompose, float(c), settings.n, settings.n_modes)
        output.tables[f"modes_C{_label(c)}.csv"] = modes_table(decomp)
        output.summary[f"lambdas_C{_label(c)}"] = decomp.lambdas.tolist()
        if settings.dump_kernels:
            grid = make_grid(settings.n, float(c))
            output.tables[f"kernel_G0_C{_label(c)}.csv"] = kernel_table(g0_matrix(grid))
            output.tables[f"kernel_G1_C{_label(c)}.csv"] = kernel_table(g1_matrix(grid))

    failed = sorted({row.c for row in rows if not row.ok})
    output.summary["couplings"] = len(settings.couplings.values())
    output.summary["failed_couplings"] = failed
    if failed:
        output.failure = NumericalError(f"Mode solve failed for {len(failed)} coupling(s)", {"couplings": failed})
    return output


async def run_readin(config: RunConfig) -> CommandOutput:
    """Shape the control for the Gaussian photon and simulate its storage."""
    settings = config.readin
    output = CommandOutput("readin")
    decomp = await asyncio.to_thread(decompose, settings.c, settings.n, settings.n_modes)
    photon = Wavepacket.gaussian(settings.sigma, settings.tau0, settings.duration, n=settings.n_tau + 1)
    (shaped,) = await shape_batch([photon], decomp, settings.overlap_threshold, workers=1)
    result = await asyncio.to_thread(simulate_readin, photon, shaped.control, settings.n_tau, settings.n_z)
    retrieval = retrieval_from_spin_wave(result.stored_spin_wave, settings.c, settings.c, min(settings.n_modes, settings.n_z))

    output.tables["control_shape.csv"] = control_table(shaped.control)
    output.tables["readin_intensity.csv"] = readin_table(result)
    if settings.dump_field:
        output.tables["readin_field.csv"] = field_table(result.solution)
    output.summary.update(
        {
            "c": settings.c,
            "overlap": shaped.overlap,
            "method": shaped.method,
            "capped": shaped.capped,
            "efficiency": result.efficiency,
            "transmitted": result.transmitted,
            "energy_error": result.energy_error,
            "predicted_efficiency": predicted_efficiency(photon, shaped.control, decomp),
            "lambda_1_squared": float(decomp.lambdas[0] ** 2),
            "retrieval_same_coupling": retrieval.n,
        }
    )
    return output


async def run_retrieval_map(config: RunConfig) -> CommandOutput:
    """Retrieval probability over the (C, Cʳ) grid and overlaps at selected points."""
    settings = config.retrieval
    output = CommandOutput("retrieval-map")
    template = make_grid(settings.n_readout, 1.0)
    points = await retrieval_map(settings.couplings.values(), settings.readout_couplings.values(), settings.n_modes, template, workers=MAX_WORKERS)
    output.tables["retrieval_map.csv"] = retrieval_table(points)

    for c, c_r in settings.overlap_points:
        point = await asyncio.to_thread(retrieval_point, c, c_r, settings.n_modes, template)
        output.tables[f"overlaps_C{_label(c)}_Cr{_label(c_r)}.csv"] = overlaps_table(point)

    computed = [point for point in points if point.ok]
    failed = [[point.c, point.c_r] for point in points if not point.ok]
    if computed:
        best = max(computed, key=lambda point: point.n)
        output.summary["best"] = {"C": best.c, "Cr": best.c_r, "N": best.n}
    output.summary["cells"] = len(points)
    output.summary["failed_cells"] = failed
    if failed:
        output.failure = NumericalError(f"Retrieval failed for {len(failed)} cell(s)", {"cells": failed})
    return output


async def run_transverse(config: RunConfig) -> CommandOutput:
    """Radial singular values, modes and the Gaussian waist of the dominant mode."""
    settings = config.transverse
    output = CommandOutput("transverse")
    decomp = await asyncio.to_thread(paraxial_modes, settings.c, settings.n_radial, settings.n_modes, settings.normalization)
    fit = gaussian_waist_fit(decomp)

    modes, sigmas = transverse_tables(decomp)
    output.tables["transverse_modes.csv"] = modes
    output.tables["transverse_sigmas.csv"] = sigmas
    output.summary.update(
        {
            "normalization": settings.normalization,
            "sigma_1": float(decomp.sigmas[0]),
            "sigma_1_flux": float(decomp.flux_sigmas[0]),
            "sigma_1_hilbert_schmidt": float(decomp.hilbert_schmidt_sigmas[0]),
            "waist": fit.waist,
            "control_waist": fit.control_waist,
        }
    )
    return output


async def run_verify(config: RunConfig) -> CommandOutput:
    """Run the acceptance checks; a failed check is reported after the report is written."""
    output = CommandOutput("verify")
    report = await run_verification(config)
    output.reports["verify_report.json"] = report.to_document()
    output.summary.update({"passed": report.passed, "checks": len(report.checks), "failed": [check.name for check in report.failed]})
    try:
        require_passed(report)
    except RamanMemoryError as e:
        output.failure = e
    return output


COMMANDS: dict[str, Callable[[RunConfig], Awaitable[CommandOutput]]] = {
    "modes": run_modes,
    "readin": run_readin,
    "retrieval-map": run_retrieval_map,
    "transverse": run_transverse,
    "verify": run_verify,
}


def write_outputs(output: CommandOutput, output_dir: Path, as_json: bool = False) -> list[Path]:
    """Write the tables of a command, then its reports.

    Args:
        output: Command results
        output_dir: Destination directory, created when missing
        as_json: Write one <command>.json document instead of the CSV set

    Returns:
        Written paths in write order
    """
    written: list[Path] = []
    if as_json and output.tables:
        document = {
            "command": output.command,
            "summary": output.summary,
            "tables": {Path(name).stem: table_document(table) for name, table in output.tables.items()},
        }
        written.append(write_json(output_dir / f"{output.command}.json", document))
    else:
        written.extend(write_table(output_dir / name, table) for name, table in output.tables.items())
    written.extend(write_json(output_dir / name, report) for name, report in output.reports.items())
    return written


def _print_json(document: Any) -> None:
    print(json.dumps(to_jsonable(document), sort_keys=True))


def _report_failure(error: RamanMemoryError, command: str | None) -> int:
    logger.error(f"{command or 'raman-memory'} failed: {error.message}")
    _print_json(create_error_report(error, command))
    return error.exit_code


def run(command: str, config: RunConfig, as_json: bool = False) -> int:
    """Run one subcommand and write its outputs.

    Args:
        command: Subcommand name
        config: Validated run configuration
        as_json: Emit one JSON document instead of CSV files

    Returns:
        Process exit status: 0 success, 1 validation error, 2 numeric failure, 3 threshold failure
    """
    handler = COMMANDS.get(command)
    if handler is None:
        return _report_failure(DomainError(f"Unknown command: {command}", {"commands": sorted(COMMANDS)}), command)

    logger.info(f"Running {command} (output directory: {config.output_dir})")
    try:
        output = asyncio.run(handler(config))
        files = write_outputs(output, config.output_dir, as_json)
        if output.failure is not None:
            raise output.failure
    except RamanMemoryError as e:
        return _report_failure(e, command)
    except OSError as e:
        return _report_failure(RamanMemoryError(f"Cannot write results: {e}", details={"output_dir": str(config.output_dir)}), command)

    _print_json({"status": "ok", "command": command, "files": [str(path) for path in files], "summary": output.summary})
    return EXIT_OK


class ArgumentParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors become DomainError (exit status 1)."""

    def error(self, message: str):
        raise DomainError(f"{self.prog}: {message}", {"usage": self.format_usage().strip()})


def _sweep_flags(parser: argparse.ArgumentParser, prefix: str, dest: str, label: str) -> None:
    for part, key in (("min", "start"), ("max", "stop"), ("step", "step")):
        parser.add_argument(f"--{prefix}-{part}", dest=f"{dest}.{key}", type=float, default=argparse.SUPPRESS, help=f"{label} sweep {part}")


def build_parser() -> ArgumentParser:
    """Parser with the global flags and one subparser per command."""
    parser = ArgumentParser(prog="raman-memory", description="Raman quantum memory: modes, readin, retrieval and transverse structure.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", type=Path, default=None, help="YAML run configuration (default: $RAMAN_MEMORY_CONFIG)")
    parser.add_argument("--output-dir", dest="output_dir", type=Path, default=argparse.SUPPRESS, help="Result directory (default: $RAMAN_MEMORY_OUTPUT_DIR)")
    parser.add_argument("--json", action="store_true", help="Write one JSON document instead of CSV tables")
    parser.add_argument("--log-level", type=str.upper, choices=LOG_LEVELS, default=None, help="Override the log level")
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="command")

    def option(sub: argparse.ArgumentParser, flag: str, dest: str, kind: type, text: str, **kwargs) -> None:
        sub.add_argument(flag, dest=dest, type=kind, default=argparse.SUPPRESS, help=text, **kwargs)

    modes = subparsers.add_parser("modes", help="Singular values and memory modes over a coupling sweep")
    option(modes, "--n", "modes.n", int, "Grid size")
    option(modes, "--n-modes", "modes.n_modes", int, "Modes per coupling")
    _sweep_flags(modes, "c", "modes.couplings", "Coupling")
    option(modes, "--dump", "modes.dump_couplings", float, "Couplings whose modes are written", nargs="+")
    modes.add_argument("--dump-kernels", dest="modes.dump_kernels", action="store_true", default=argparse.SUPPRESS, help="Also write G0 and G1")

    readin = subparsers.add_parser("readin", help="Modematched control and storage of a Gaussian photon")
    option(readin, "--c", "readin.c", float, "Coupling")
    option(readin, "--n", "readin.n", int, "Mode grid size")
    option(readin, "--n-modes", "readin.n_modes", int, "Modes kept for the prediction")
    option(readin, "--n-tau", "readin.n_tau", int, "Time cells")
    option(readin, "--n-z", "readin.n_z", int, "Space cells")
    option(readin, "--sigma", "readin.sigma", float, "Photon intensity FWHM")
    option(readin, "--tau0", "readin.tau0", float, "Photon centre")
    option(readin, "--duration", "readin.duration", float, "Pulse window T")
    option(readin, "--overlap-threshold", "readin.overlap_threshold", float, "Minimum mode overlap")
    readin.add_argument("--dump-field", dest="readin.dump_field", action="store_true", default=argparse.SUPPRESS, help="Also write the signal field")

    retrieval = subparsers.add_parser("retrieval-map", help="Retrieval probability over readin and readout couplings")
    option(retrieval, "--n-readout", "retrieval.n_readout", int, "Readout mesh size")
    option(retrieval, "--n-modes", "retrieval.n_modes", int, "Readout modes")
    _sweep_flags(retrieval, "c", "retrieval.couplings", "Readin coupling")
    _sweep_flags(retrieval, "cr", "retrieval.readout_couplings", "Readout coupling")
    option(retrieval, "--overlap-point", "retrieval.overlap_points", float, "Write overlaps at C CR", nargs=2, action="append", metavar=("C", "CR"))

    transverse = subparsers.add_parser("transverse", help="Transverse singular values and the dominant radial mode")
    option(transverse, "--c", "transverse.c", float, "Coupling")
    option(transverse, "--n-radial", "transverse.n_radial", int, "Radial samples")
    option(transverse, "--n-modes", "transverse.n_modes", int, "Modes kept")
    option(transverse, "--normalization", "transverse.normalization", str, "Singular value normalization", choices=("flux", "hilbert-schmidt"))

    verify = subparsers.add_parser("verify", help="Run every acceptance check")
    option(verify, "--n", "verify.n", int, "Mode grid size")
    option(verify, "--n-propagation", "verify.n_propagation", int, "Propagation mesh")
    option(verify, "--n-stokes", "verify.n_stokes", int, "Stokes mesh")
    option(verify, "--flux-trials", "verify.flux_trials", int, "Random flux trials")
    option(verify, "--seed", "verify.seed", int, "Random seed")
    return parser


def overrides_from_args(args: argparse.Namespace) -> dict[str, Any]:
    """Nest dotted flag destinations, e.g. {"modes.n": 200} -> {"modes": {"n": 200}}."""
    overrides: dict[str, Any] = {}
    for key, value in vars(args).items():
        if key in ("config", "json", "log_level", "command"):
            continue
        *parents, leaf = key.split(".")
        target = overrides
        for parent in parents:
            target = target.setdefault(parent, {})
        target[leaf] = value
    return overrides


def run_cli(argv: Sequence[str] | None = None) -> int:
    """Parse arguments, load the configuration and run the command.

    Args:
        argv: Arguments without the program name; sys.argv when None

    Returns:
        Process exit status
    """
    command = None
    try:
        args = build_parser().parse_args(argv)
        command = args.command
        if args.log_level:
            logging.getLogger().setLevel(args.log_level)
        config = load_run_config(args.config, overrides_from_args(args))
    except RamanMemoryError as e:
        return _report_failure(e, command)
    return run(command, config, as_json=args.json)
