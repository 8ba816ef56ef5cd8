"""
Command-line front end: `python -m app.cli <command> ...`.

Reports go to stdout in the chosen format; logging and error messages go
to stderr. Exit status is 0 on success, 1 when the toolkit reports an
error and 2 on bad usage or unreadable input.
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import ValidationError

from app.core.config import RunConfig, configure, load_settings
from app.core.errors import InputFormatError, ToolkitError
from app.core.logging_config import configure_logging
from app.models.models import AxisKind, Topology
from app.services import plotting
from app.services.workflows import COMMANDS, CommandResult
from app.storage import files

logger = logging.getLogger(__name__)


def positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return value


def non_negative_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if value < 0:
        raise argparse.ArgumentTypeError(f"must not be negative, got {text}")
    return value


def on_off(text: str) -> bool:
    if text.lower() in ("on", "yes", "true", "1"):
        return True
    if text.lower() in ("off", "no", "false", "0"):
        return False
    raise argparse.ArgumentTypeError(f"expected on or off, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="KEY=value settings file read in place of .env")
    common.add_argument("--out-dir", type=Path, help="Also write <command>.json, <command>.csv and figures here")
    common.add_argument("--format", dest="output_format", choices=["text", "csv", "json"],
                        help="stdout rendering (default from settings: text)")
    common.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"])

    parser = argparse.ArgumentParser(prog="microcavity", description="Fabry-Perot microcavity design and analysis")
    commands = parser.add_subparsers(dest="command", required=True)

    design = commands.add_parser("design", parents=[common], help="Mode geometry and figures of merit")
    design.add_argument("--topology", choices=[item.value for item in Topology], required=True)
    design.add_argument("--roc-um", type=positive_float, required=True)
    design.add_argument("--lambda-nm", type=positive_float, required=True)
    length = design.add_mutually_exclusive_group(required=True)
    length.add_argument("--length-um", type=positive_float, help="Effective length, penetration included")
    length.add_argument("--spacing-um", type=positive_float, help="Geometric mirror spacing")
    design.add_argument("--penetration-lambda", type=non_negative_float)
    design.add_argument("--depth-um", type=non_negative_float, default=0.0)
    design.add_argument("--transmission-ppm", type=non_negative_float)
    design.add_argument("--excess-loss-ppm", type=non_negative_float)
    design.add_argument("--roughness-nm", type=non_negative_float)
    design.add_argument("--absorption-ppm", type=non_negative_float)
    design.add_argument("--loss-ppm", type=positive_float, help="Total round-trip loss; replaces the itemized budget")
    design.add_argument("--branching-ratio", type=non_negative_float)
    design.add_argument("--medium-index", type=positive_float)
    design.add_argument("--svg", action="store_true", help="Add the mode-envelope sketch")

    commands.add_parser("table1", parents=[common], help="Reference cavities: computed vs measured")

    spectrum = commands.add_parser("spectrum", parents=[common], help="Linewidth, finesse and length from scans")
    spectrum.add_argument("inputs", nargs="+", type=Path, help="x,signal CSV file(s)")
    spectrum.add_argument("--x-unit", choices=[item.value for item in AxisKind],
                          default=AxisKind.FREQUENCY_GHZ.value)
    spectrum.add_argument("--sideband-mhz", type=positive_float)
    spectrum.add_argument("--roc-um", type=positive_float)
    spectrum.add_argument("--fsr-thz", type=positive_float)
    spectrum.add_argument("--lambda-nm", type=positive_float)
    spectrum.add_argument("--topology", choices=[item.value for item in Topology], default=Topology.PC.value)

    profile = commands.add_parser("profile", parents=[common], help="Radius of curvature from a height map")
    profile.add_argument("inputs", nargs=1, type=Path, help="x_um,y_um,z_um CSV file")
    profile.add_argument("--fit-radius-um", type=positive_float)
    profile.add_argument("--quartic", type=on_off, default=True, help="on or off")

    sweep = commands.add_parser("sweep", parents=[common], help="Finesse versus cavity length")
    sweep.add_argument("--calibration", default="PC-a", help="PC-a or PC-a2")
    sweep.add_argument("--length-range", nargs=2, type=positive_float, metavar=("MIN_UM", "MAX_UM"),
                       default=(10.0, 40.0))
    sweep.add_argument("--points", type=int, default=61)
    sweep.add_argument("--shape-loss", type=on_off, default=True, help="on or off")
    sweep.add_argument("--shape-amplitude-ppm", type=non_negative_float)
    sweep.add_argument("--shape-reference-um", type=positive_float)
    sweep.add_argument("--shape-scale-um", type=positive_float)
    return parser


def _options(args: argparse.Namespace) -> Dict[str, Any]:
    """Subcommand flags in the shape the workflows expect."""
    values = vars(args)
    if args.command == "design":
        keys = ["topology", "roc_um", "lambda_nm", "length_um", "spacing_um", "penetration_lambda", "depth_um",
                "transmission_ppm", "excess_loss_ppm", "roughness_nm", "absorption_ppm", "loss_ppm",
                "branching_ratio", "medium_index", "svg"]
        return {key: values[key] for key in keys if values[key] is not None}
    if args.command == "spectrum":
        return {key: values[key] for key in ("x_unit", "sideband_mhz", "roc_um", "fsr_thz", "lambda_nm", "topology")}
    if args.command == "profile":
        return {"fit_radius_um": args.fit_radius_um, "quartic": args.quartic}
    if args.command == "sweep":
        options = {
            "calibration": args.calibration,
            "length_min_um": args.length_range[0],
            "length_max_um": args.length_range[1],
            "n_points": args.points,
            "shape_loss": args.shape_loss,
            "shape_amplitude_ppm": args.shape_amplitude_ppm,
            "shape_reference_um": args.shape_reference_um,
            "shape_scale_um": args.shape_scale_um,
        }
        return {key: value for key, value in options.items() if value is not None}
    return {}


def render(result: CommandResult, output_format: str) -> str:
    if output_format == "json":
        return files.report_to_json(result.report)
    if output_format == "csv":
        return files.rows_to_csv(result.rows)
    return result.text


def write_artifacts(config: RunConfig, result: CommandResult) -> List[Path]:
    out_dir = config.out_dir
    written = [
        files.write_text(files.report_to_json(result.report), out_dir / f"{config.command}.json"),
        files.write_text(files.rows_to_csv(result.rows), out_dir / f"{config.command}.csv"),
    ]
    for name, figure in result.figures.items():
        written.append(plotting.save_svg(figure, out_dir / name))
    return written


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.config is not None and not args.config.is_file():
        print(f"error: config file not found: {args.config}", file=sys.stderr)
        return 2
    try:
        settings = configure(load_settings(
            args.config,
            log_level=args.log_level,
            output_format=args.output_format,
            out_dir=args.out_dir,
        ))
    except ValidationError as exc:
        print(f"error: invalid settings: {exc}", file=sys.stderr)
        return 2
    configure_logging(settings.log_level)

    try:
        config = RunConfig(
            command=args.command,
            inputs=getattr(args, "inputs", []),
            settings=settings,
            out_dir=settings.out_dir,
            output_format=settings.output_format,
            options=_options(args),
        )
        result = COMMANDS[config.command](config)
    except (InputFormatError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ToolkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    print(render(result, config.output_format))
    if config.out_dir is not None:
        write_artifacts(config, result)
    logger.debug("%s finished", config.command)
    return 0


if __name__ == "__main__":
    sys.exit(main())
