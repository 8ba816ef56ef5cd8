"""
API router for cavity design and measurement analysis.
"""
import logging
from typing import Optional

from fastapi import APIRouter, File, Form, HTTPException, UploadFile

from app.core.errors import InputFormatError, ToolkitError
from app.models.models import AxisKind, Topology
from app.models.schemas import (
    DesignReport,
    DesignRequest,
    ErrorResponse,
    ProfileReport,
    SpectrumReport,
    SweepReport,
    SweepRequest,
    Table1Report,
)
from app.services import workflows
from app.storage import files

logger = logging.getLogger(__name__)

router = APIRouter()

ERROR_RESPONSES = {
    400: {"model": ErrorResponse, "description": "Unreadable input file"},
    422: {"model": ErrorResponse, "description": "Physically invalid request or failed fit"},
}


class CavityHTTPException(HTTPException):
    """HTTP failure carrying the name of the service error behind it."""

    def __init__(self, status_code: int, detail: str, error_code: str):
        super().__init__(status_code=status_code, detail=detail)
        self.error_code = error_code


def _http_error(exc: Exception) -> CavityHTTPException:
    """Map a service failure onto an HTTP status."""
    error_code = type(exc).__name__
    if isinstance(exc, InputFormatError):
        return CavityHTTPException(400, str(exc), error_code)
    if isinstance(exc, ToolkitError):
        return CavityHTTPException(422, str(exc), error_code)
    logger.exception("Unexpected failure")
    return CavityHTTPException(500, f"Internal error: {exc}", error_code)


@router.post(
    "/design",
    response_model=DesignReport,
    responses=ERROR_RESPONSES,
    summary="Design report for one cavity",
)
def design(request: DesignRequest):
    """
    Mode geometry, loss budget, finesse, Q, enhancement and Purcell factor.

    - **length_um** or **spacing_um**: exactly one is required
    - **loss_ppm**: replaces the itemized loss budget when given
    """
    try:
        return workflows.run_design(request)
    except Exception as exc:
        raise _http_error(exc)


@router.get("/table1", response_model=Table1Report, summary="Reference cavities, computed vs measured")
def table1():
    return workflows.run_table1()


@router.post(
    "/spectrum",
    response_model=SpectrumReport,
    responses=ERROR_RESPONSES,
    summary="Analyse one laser scan",
)
def spectrum(
    file: UploadFile = File(..., description="CSV with x,signal columns"),
    x_unit: AxisKind = Form(AxisKind.FREQUENCY_GHZ),
    sideband_mhz: Optional[float] = Form(None, gt=0),
    roc_um: Optional[float] = Form(None, gt=0),
    fsr_thz: Optional[float] = Form(None, gt=0),
    lambda_nm: Optional[float] = Form(None, gt=0),
    topology: Topology = Form(Topology.PC),
):
    """
    Detect dips, calibrate on sidebands when **sideband_mhz** is given, fit the
    carrier linewidth and, with **roc_um**, infer length and FSR from the mode ladder.
    """
    try:
        scan = files.read_spectrum_csv(file.file, x_unit)
        return workflows.analyse_spectrum(
            scan,
            source=file.filename or "<upload>",
            sideband_mhz=sideband_mhz,
            roc_um=roc_um,
            fsr_thz=fsr_thz,
            lambda_nm=lambda_nm,
            topology=topology,
        )
    except Exception as exc:
        raise _http_error(exc)


@router.post(
    "/profile",
    response_model=ProfileReport,
    responses=ERROR_RESPONSES,
    summary="Radius of curvature from a height map",
)
def profile(
    file: UploadFile = File(..., description="CSV with x_um,y_um,z_um columns"),
    fit_radius_um: Optional[float] = Form(None, gt=0),
    quartic: bool = Form(True),
):
    try:
        surface = files.read_surface_csv(file.file)
        report, _ = workflows.analyse_profile(
            surface,
            source=file.filename or "<upload>",
            fit_radius_um=fit_radius_um,
            include_quartic=quartic,
        )
        return report
    except Exception as exc:
        raise _http_error(exc)


@router.post(
    "/sweep",
    response_model=SweepReport,
    responses=ERROR_RESPONSES,
    summary="Finesse versus cavity length",
)
def sweep(request: SweepRequest):
    try:
        report, _ = workflows.run_sweep(request)
        return report
    except Exception as exc:
        raise _http_error(exc)
