"""
Flat-file persistence: spectrum and surface CSV input, report output.
"""
import json
import logging
from pathlib import Path
from typing import IO, Iterable, List, Mapping, Union

import pandas as pd
from pydantic import BaseModel, ValidationError

from app.core.errors import InputFormatError
from app.models.models import AxisKind, Spectrum, SurfaceMap

logger = logging.getLogger(__name__)

Source = Union[str, Path, IO]

SPECTRUM_COLUMNS = ("x", "signal")
SURFACE_COLUMNS = ("x_um", "y_um", "z_um")


def _source_name(source: Source) -> str:
    if isinstance(source, (str, Path)):
        return str(source)
    name = getattr(source, "name", None)
    return name if isinstance(name, str) else "<upload>"


def _read_columns(source: Source, columns: Iterable[str]) -> pd.DataFrame:
    """
    Read a headed CSV and keep the required numeric columns.

    Args:
        source: Path or open file
        columns: Required header names

    Returns:
        DataFrame with exactly `columns`, as float
    """
    name = _source_name(source)
    try:
        frame = pd.read_csv(source, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise InputFormatError(f"{name}: file is empty")
    except (pd.errors.ParserError, UnicodeDecodeError) as exc:
        raise InputFormatError(f"{name}: not a readable CSV ({exc})")
    frame.columns = [str(column).strip() for column in frame.columns]
    missing = [column for column in columns if column not in frame.columns]
    if missing:
        raise InputFormatError(f"{name}: missing column(s) {', '.join(missing)}")
    if frame.empty:
        raise InputFormatError(f"{name}: header only, no data rows")
    try:
        return frame[list(columns)].astype(float)
    except ValueError as exc:
        raise InputFormatError(f"{name}: non-numeric value ({exc})")


def read_spectrum_csv(source: Source, axis_kind: AxisKind) -> Spectrum:
    """Read an `x,signal` scan; the x unit comes from the caller."""
    frame = _read_columns(source, SPECTRUM_COLUMNS)
    try:
        spectrum = Spectrum(axis_kind=AxisKind(axis_kind), x=frame["x"].to_numpy(), signal=frame["signal"].to_numpy())
    except ValidationError as exc:
        raise InputFormatError(f"{_source_name(source)}: {exc.errors()[0]['msg']}")
    logger.debug("Loaded %d-point %s scan from %s", spectrum.n_points, spectrum.axis_kind.value, _source_name(source))
    return spectrum


def read_surface_csv(source: Source) -> SurfaceMap:
    """Read an `x_um,y_um,z_um` height map."""
    frame = _read_columns(source, SURFACE_COLUMNS)
    try:
        surface = SurfaceMap(x_um=frame["x_um"].to_numpy(), y_um=frame["y_um"].to_numpy(),
                             z_um=frame["z_um"].to_numpy())
    except ValidationError as exc:
        raise InputFormatError(f"{_source_name(source)}: {exc.errors()[0]['msg']}")
    logger.debug("Loaded %d-point surface map from %s", surface.n_points, _source_name(source))
    return surface


def write_spectrum_csv(spectrum: Spectrum, path: Path) -> Path:
    pd.DataFrame({"x": spectrum.x, "signal": spectrum.signal}).to_csv(
        path, index=False, float_format="%.12g", lineterminator="\n"
    )
    return path


def write_surface_csv(surface: SurfaceMap, path: Path) -> Path:
    pd.DataFrame({"x_um": surface.x_um, "y_um": surface.y_um, "z_um": surface.z_um}).to_csv(
        path, index=False, float_format="%.12g", lineterminator="\n"
    )
    return path


def rows_to_csv(rows: List[Mapping]) -> str:
    return pd.DataFrame(list(rows)).to_csv(index=False, float_format="%.10g", lineterminator="\n")


def report_to_json(report: Union[BaseModel, List[BaseModel]]) -> str:
    if isinstance(report, list):
        return json.dumps([json.loads(item.model_dump_json()) for item in report], indent=2)
    return report.model_dump_json(indent=2)


def write_text(text: str, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(text if text.endswith("\n") else text + "\n")
    logger.info("Wrote %s", path)
    return path
