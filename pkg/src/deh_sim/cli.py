"""
Command-line front end.

    deh-sim simulate --gap 1 --amp 0.05 --phase 1.0 --t-final auto
    deh-sim sweep --axis A:0.005:0.3:60 --axis phi:0:6.283185307179586:64 --jobs 4 --out fig3.csv
    deh-sim classical --model oscillator
    deh-sim entropy --system quantum-rwa
    deh-sim vu --levels -1 0 1 --source 0 --target 2
    deh-sim power --intensity 1000 --dipole-debye 75 --gap-mev 1 --density 2.5e15

Values resolve as defaults < config file (--config, JSON or TOML) < flags.
"""

import argparse
import json
import logging
import sys
import tomllib
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import ValidationError

from .config import settings, setup_logging, validate_settings
from .exceptions import ConfigError, DehError
from .models import Command, FrequencyConvention, RunConfig, SystemKind
from .output import emit
from .services import SimulationRouter

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2

# flags that steer the CLI itself rather than the run
CONTROL_KEYS = ("config", "show_config", "log_level", "log_format")


def _common_options() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)

    drive = parent.add_argument_group("drive")
    drive.add_argument("--gap", type=float, help="Energy gap E of -(E/2)Z (hbar = 1)")
    drive.add_argument("--amp", type=float, help="Coupling amplitude A")
    drive.add_argument("--omega", type=float, help="Drive angular frequency (default: resonance)")
    drive.add_argument("--phase", type=float, help="Source phase φ in radians")
    drive.add_argument("--envelope", help="const | ramp:<frac> | beat:<ω1>,<ω2>")
    drive.add_argument("--t-final", help="Stopping time, or 'auto' to solve ∫2A(t)dt = π")
    drive.add_argument("--system", choices=[k.value for k in SystemKind], help="Dynamics to run")

    numerics = parent.add_argument_group("numerics")
    numerics.add_argument("--phi-grid", type=int, help=f"Phase ensemble size (default {settings.phi_grid})")
    numerics.add_argument("--phi-mode", choices=["grid", "sampled"], help="Uniform grid or seeded uniform samples")
    numerics.add_argument("--steps-per-period", type=int, help=f"Steps per drive period (default {settings.steps_per_period})")
    numerics.add_argument("--seed", type=int, help="Seed for sampled phases")
    numerics.add_argument("--jobs", type=int, help="Worker processes for sweeps")

    sweep = parent.add_argument_group("sweep")
    sweep.add_argument("--axis", action="append", help="name:min:max:count; names A, phi, dA, dT, domega, ramp")
    sweep.add_argument("--tolerance", type=float, help="Largest population spread accepted over φ")
    sweep.add_argument("--min-population", type=float, help="Smallest final population accepted")

    classical = parent.add_argument_group("classical")
    classical.add_argument("--model", choices=["oscillator", "electric", "magnetic", "llg"])
    classical.add_argument("--mass", type=float)
    classical.add_argument("--spring", type=float)
    classical.add_argument("--force", type=float, help="Force amplitude F0")
    classical.add_argument("--q0", type=float, help="Initial position α")
    classical.add_argument("--v0", type=float, help="Initial velocity β")
    classical.add_argument("--t-max", type=float, help="Largest stopping time scanned by the certificate")
    classical.add_argument("--t-points", type=int, help="Number of stopping times / trace samples")
    classical.add_argument("--coupling", type=float, help="α (electric), β (magnetic) or γ (llg)")
    classical.add_argument("--static-field", type=float, help="Static field E0 or B0 along z")
    classical.add_argument("--damping", type=float, help="Gilbert damping (llg, never certified)")

    vu = parent.add_argument_group("vu")
    vu.add_argument("--levels", type=float, nargs="+", help="Eigenvalues of a diagonal H0")
    vu.add_argument("--source", type=int, help="Source level, 0-based in ascending energy")
    vu.add_argument("--target", type=int, help="Target level, 0-based in ascending energy")
    vu.add_argument("--theta", type=float)
    vu.add_argument("--theta-tilde", type=float)
    vu.add_argument("--tau", type=float)

    power = parent.add_argument_group("power")
    power.add_argument("--intensity", type=float, help="W/m^2")
    power.add_argument("--dipole-debye", type=float)
    power.add_argument("--gap-mev", type=float)
    power.add_argument("--density", type=float, help="Dipoles per m^2")
    power.add_argument("--convention", choices=[c.value for c in FrequencyConvention])

    out = parent.add_argument_group("output")
    out.add_argument("--format", choices=["csv", "json"])
    out.add_argument("--out", help="Output path (default: stdout)")
    out.add_argument("--config", help="JSON or TOML file of flag values")
    out.add_argument("--show-config", action="store_true", help="Print the resolved config and exit")
    out.add_argument("--log-level", help="DEBUG, INFO, WARNING, ERROR")
    out.add_argument("--log-format", choices=["text", "json"])
    return parent


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="deh-sim",
        description="Deterministic energy harvesting: simulations, robustness sweeps and estimates.",
    )
    subparsers = parser.add_subparsers(dest="command", metavar="command")
    parent = _common_options()
    helps = {
        Command.SIMULATE: "Time trace of one protocol run",
        Command.SWEEP: "Population over a grid of amplitudes, phases and deviations",
        Command.CLASSICAL: "Oscillator failure certificate or dipole trajectory",
        Command.ENTROPY: "Entropy of the phase-averaged state over time",
        Command.VU: "Constant potential moving level i to level j",
        Command.POWER: "Power estimate for a dipole array",
    }
    for command, text in helps.items():
        subparsers.add_parser(command.value, parents=[parent], help=text, description=text,
                              argument_default=argparse.SUPPRESS)
    return parser


def load_config_file(path: str) -> Dict[str, Any]:
    """Flat key/value document; keys may use '-' or '_'."""
    file = Path(path)
    try:
        raw = file.read_bytes()
    except OSError as e:
        raise ConfigError(f"Cannot read config file {path}: {e}", key="config") from e
    try:
        if file.suffix.lower() == ".toml":
            data = tomllib.loads(raw.decode("utf-8"))
        else:
            data = json.loads(raw)
    except (ValueError, UnicodeDecodeError) as e:
        raise ConfigError(f"Malformed config file {path}: {e}", key="config") from e
    if not isinstance(data, dict):
        raise ConfigError(f"Config file {path} must hold a flat object", key="config")
    values = {}
    for key, value in data.items():
        if isinstance(value, dict):
            raise ConfigError(f"Config key {key!r} is nested; only flat key/value pairs are accepted", key=key)
        values[key.replace("-", "_")] = value
    if isinstance(values.get("axis"), str):
        values["axis"] = [values["axis"]]
    return values


def parse_config(args: argparse.Namespace, config_path: Optional[str] = None) -> RunConfig:
    """Resolve defaults < config file < flags into a validated RunConfig."""
    values: Dict[str, Any] = {
        "phi_grid": settings.phi_grid,
        "steps_per_period": settings.steps_per_period,
        "jobs": settings.jobs,
    }
    path = config_path or getattr(args, "config", None)
    if path:
        values.update(load_config_file(path))
    flags = {k: v for k, v in vars(args).items() if k not in CONTROL_KEYS}
    values.update(flags)

    try:
        return RunConfig(**values)
    except ValidationError as e:
        first = e.errors()[0]
        key = ".".join(str(part) for part in first["loc"]) or "config"
        raise ConfigError(f"Invalid value for {key}: {first['msg']}", key=key) from e


def main(argv: Optional[List[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    parser = build_parser()
    if not argv:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    args = parser.parse_args(argv)
    if getattr(args, "command", None) is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE

    setup_logging(getattr(args, "log_level", None), getattr(args, "log_format", None))
    try:
        validate_settings()
        cfg = parse_config(args)
        if getattr(args, "show_config", False):
            print(json.dumps(cfg.model_dump(mode="json"), indent=2, sort_keys=True))
            return EXIT_OK
        table = SimulationRouter().route(cfg)
        emit(table, cfg.format, cfg.out)
    except DehError as e:
        logger.error(str(e))
        print(f"deh-sim: error: {e}", file=sys.stderr)
        return e.exit_code
    except ValueError as e:
        logger.error(str(e))
        print(f"deh-sim: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
