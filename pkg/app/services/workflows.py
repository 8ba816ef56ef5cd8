"""
Command pipelines shared by the CLI and the HTTP router.

Each `run_*`/`analyse_*` function returns a report schema; each `cmd_*`
function wraps one for a parsed RunConfig and adds the rendered text,
CSV rows and figures.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, NamedTuple, Optional, Tuple, Union

import numpy as np
import pandas as pd
from matplotlib.figure import Figure
from pydantic import BaseModel

from app.core.config import RunConfig, settings
from app.core.constants import SWEEP_CALIBRATIONS, get_sweep_calibration, list_table1_rows
from app.core.errors import DomainError, FitError
from app.models.models import (
    AxisKind,
    CavityGeometry,
    FinesseCurve,
    ProfileFit,
    Spectrum,
    SurfaceMap,
    Topology,
    Wavelength,
)
from app.models.schemas import (
    DesignReport,
    DesignRequest,
    LinewidthReport,
    ProfileReport,
    SpectrumReport,
    SweepPointReport,
    SweepReport,
    SweepRequest,
    Table1Report,
    Table1RowReport,
)
from app.services import losses, optics, plotting, profilometry, spectra
from app.storage import files

logger = logging.getLogger(__name__)

ENHANCEMENT_NOTE = (
    "Enhancement is Q/(V/lambda^3) evaluated from the measured Q and V columns. "
    "The printed enhancement of the PC rows does not follow from those columns "
    "(4.1e6/30.8 = 1.33e5 for PC-f); CC-a gives 4.8e4, printed as ~0.5e5."
)


class CommandResult(NamedTuple):
    report: Union[BaseModel, List[BaseModel]]
    rows: List[Dict[str, Any]]
    text: str
    figures: Dict[str, Figure]


def _key_value_text(values: Dict[str, Any]) -> str:
    return pd.Series(values, dtype=object).to_string()


def _table_text(rows: List[Dict[str, Any]], columns: Optional[List[str]] = None) -> str:
    frame = pd.DataFrame(rows)
    if columns is not None:
        frame = frame[columns]
    return frame.to_string(index=False, float_format=lambda value: f"{value:.6g}")


# design

def design_geometry(request: DesignRequest) -> Tuple[CavityGeometry, Wavelength]:
    wavelength = Wavelength(nm=request.lambda_nm)
    penetration = settings.penetration_lambda if request.penetration_lambda is None else request.penetration_lambda
    coating = dict(
        depth_um=request.depth_um,
        transmission_ppm=settings.transmission_ppm if request.transmission_ppm is None else request.transmission_ppm,
        excess_loss_ppm=settings.excess_loss_ppm if request.excess_loss_ppm is None else request.excess_loss_ppm,
        roughness_nm=settings.roughness_nm if request.roughness_nm is None else request.roughness_nm,
        medium_index=settings.medium_index if request.medium_index is None else request.medium_index,
    )
    try:
        if request.length_um is not None:
            geom = CavityGeometry.from_effective_length(
                request.topology, request.roc_um, request.length_um, wavelength, penetration, **coating
            )
        else:
            geom = CavityGeometry.build(
                request.topology, request.roc_um, request.spacing_um, wavelength, penetration, **coating
            )
    except ValueError as exc:
        raise DomainError(str(exc)) from exc
    return geom, wavelength


def run_design(request: DesignRequest) -> DesignReport:
    """Mode geometry, loss budget and figures of merit of one cavity."""
    geom, wavelength = design_geometry(request)
    stability = optics.stability(geom)
    mode = optics.gaussian_mode(geom, wavelength)
    budget = losses.loss_budget(geom, wavelength, absorption_ppm=request.absorption_ppm)
    total = budget.total_ppm if request.loss_ppm is None else request.loss_ppm
    exact, approx = losses.finesse_from_loss(total)
    figures = losses.enhancement_report(
        exact, mode.effective_length_um, wavelength, mode.mode_volume_lambda3,
        branching_ratio=request.branching_ratio, medium_index=geom.medium_index,
    )
    return DesignReport(
        topology=geom.topology,
        roc_um=geom.roc_um,
        lambda_nm=wavelength.nm,
        spacing_um=geom.geometric_spacing_um,
        length_um=mode.effective_length_um,
        g_product=stability.g_product,
        stable=stability.is_stable,
        waist_um=mode.waist_um,
        rayleigh_um=mode.rayleigh_um,
        volume_um3=mode.mode_volume_um3,
        volume_lambda3=mode.mode_volume_lambda3,
        fsr_thz=mode.fsr_thz,
        transverse_spacing_thz=mode.transverse_spacing_thz,
        loss=budget,
        total_loss_ppm=total,
        finesse=exact,
        finesse_approx=approx,
        quality=figures.quality,
        linewidth_mhz=losses.linewidth_from_finesse(exact, mode.effective_length_um, geom.medium_index),
        photon_lifetime_ns=losses.photon_lifetime(exact, mode.effective_length_um) * 1e9,
        enhancement=figures.enhancement,
        purcell=figures.purcell,
        branching_ratio=figures.branching_ratio,
    )


def cmd_design(config: RunConfig) -> CommandResult:
    options = dict(config.options)
    sketch = options.pop("svg", False)
    request = DesignRequest(**options)
    report = run_design(request)
    figures = {}
    if sketch:
        geom, wavelength = design_geometry(request)
        figures["design.svg"] = plotting.mode_sketch(geom, wavelength)
    row = report.csv_row()
    return CommandResult(report, [row], _key_value_text(row), figures)


# table1

def run_table1() -> Table1Report:
    """Waist and mode volume of every reference cavity beside the measured values."""
    rows = []
    for reference in list_table1_rows().values():
        wavelength = Wavelength(nm=reference.wavelength_nm)
        geom = CavityGeometry.from_effective_length(
            reference.topology, reference.roc_um, reference.length_um, wavelength, settings.penetration_lambda
        )
        mode = optics.gaussian_mode(geom, wavelength)
        quality = losses.q_from_finesse(reference.finesse, reference.length_um, wavelength)
        rows.append(Table1RowReport(
            name=reference.name,
            topology=reference.topology,
            lambda_nm=reference.wavelength_nm,
            roc_um=reference.roc_um,
            length_um=reference.length_um,
            waist_um=mode.waist_um,
            waist_table_um=reference.waist_um,
            waist_delta_um=mode.waist_um - reference.waist_um,
            waist_within=abs(mode.waist_um - reference.waist_um) <= reference.waist_sigma_um,
            volume_lambda3=mode.mode_volume_lambda3,
            volume_table_lambda3=reference.volume_lambda3,
            volume_delta_lambda3=mode.mode_volume_lambda3 - reference.volume_lambda3,
            volume_within=abs(mode.mode_volume_lambda3 - reference.volume_lambda3) <= reference.volume_sigma_lambda3,
            finesse_table=reference.finesse,
            quality_from_finesse=quality,
            quality_table=reference.quality,
            quality_within=abs(quality - reference.quality) <= reference.quality_sigma,
            enhancement_eq=losses.enhancement(reference.quality, reference.volume_lambda3),
            enhancement_table=reference.enhancement,
        ))
    within = all(row.waist_within and row.volume_within for row in rows)
    return Table1Report(rows=rows, geometry_within=within, note=ENHANCEMENT_NOTE)


def cmd_table1(config: RunConfig) -> CommandResult:
    report = run_table1()
    rows = [row.model_dump(mode="json") for row in report.rows]
    columns = ["name", "waist_um", "waist_table_um", "waist_delta_um", "waist_within",
               "volume_lambda3", "volume_table_lambda3", "volume_delta_lambda3", "volume_within",
               "quality_from_finesse", "quality_table", "enhancement_eq", "enhancement_table"]
    text = _table_text(rows, columns) + "\n\n" + report.note
    return CommandResult(report, rows, text, {})


# spectrum

def analyse_spectrum(
    spectrum: Spectrum,
    source: str = "<memory>",
    sideband_mhz: Optional[float] = None,
    roc_um: Optional[float] = None,
    fsr_thz: Optional[float] = None,
    lambda_nm: Optional[float] = None,
    topology: Topology = Topology.PC,
) -> SpectrumReport:
    """
    Detect dips, calibrate on sidebands, fit the carrier linewidth and,
    with a known ROC and two or more modes, infer the length and FSR.
    """
    warnings: List[str] = []
    peaks = spectra.detect_peaks(spectrum)
    if not peaks:
        raise FitError(f"{source}: no dip deeper than {settings.min_contrast:g}")

    calibration = None
    if sideband_mhz is not None:
        calibration = spectra.calibrate_with_sidebands(spectrum, sideband_mhz, peaks)
        carrier, left, right = spectra.carrier_and_sidebands(peaks)
        fit = spectra.fit_lorentzian(spectrum, carrier, sideband_spacing=calibration.sideband_spacing_measured,
                                     calibration=calibration)
        mode_peaks = [peak for peak in peaks if peak is not left and peak is not right]
    else:
        carrier = max(peaks, key=lambda peak: peak.contrast)
        fit = spectra.fit_lorentzian(spectrum, carrier)
        mode_peaks = peaks
    if fit.fwhm_mhz is None:
        warnings.append("linewidth reported in raw axis units: no sideband calibration")

    ladder = None
    fsr, fsr_source = None, None
    if roc_um is not None:
        if len(mode_peaks) >= 2 and spectrum.axis_kind is not AxisKind.SAMPLE_INDEX:
            refined = []
            for peak in mode_peaks:
                try:
                    refined.append(spectra.fit_lorentzian(spectrum, peak).as_peak())
                except FitError as exc:
                    warnings.append(f"dropped dip at {peak.center:.8g} from the mode ladder: {exc}")
            ladder = spectra.identify_mode_ladder(refined, roc_um, spectrum.axis_kind, topology)
            warnings.extend(f"dip at {peak.center:.8g} is off the mode ladder" for peak in ladder.unassigned)
            fsr, fsr_source = ladder.fsr_thz, "ladder"
        else:
            warnings.append("mode ladder skipped: needs two modes on an absolute axis")
    if fsr_thz is not None:
        fsr, fsr_source = fsr_thz, "given"

    finesse = loss = quality = None
    if fsr is not None and fit.fwhm_mhz is not None:
        finesse = spectra.finesse_from_linewidth(fsr, fit.fwhm_mhz)
        loss = losses.loss_from_finesse(finesse) if finesse > 1 else None
    if lambda_nm is None and spectrum.axis_kind is AxisKind.WAVELENGTH_NM:
        lambda_nm = fit.center
    if lambda_nm is not None and fit.fwhm_mhz is not None:
        quality = losses.q_from_linewidth(Wavelength(nm=lambda_nm), fit.fwhm_mhz)

    for message in warnings:
        logger.warning("%s: %s", source, message)
    return SpectrumReport(
        source=source,
        axis_kind=spectrum.axis_kind,
        n_points=spectrum.n_points,
        peaks=peaks,
        calibration=calibration,
        fit=LinewidthReport(
            center=fit.center,
            center_sigma=fit.center_sigma,
            fwhm=fit.fwhm,
            fwhm_sigma=fit.fwhm_sigma,
            fwhm_mhz=fit.fwhm_mhz,
            fwhm_sigma_mhz=fit.fwhm_sigma_mhz,
            contrast=fit.contrast,
            sideband_ratio=fit.sideband_ratio,
            residual=fit.residual_rms,
        ),
        ladder=ladder,
        fsr_thz=fsr,
        fsr_source=fsr_source,
        finesse=finesse,
        loss_ppm=loss,
        quality=quality,
        warnings=warnings,
    )


def spectrum_plot(spectrum: Spectrum, report: SpectrumReport) -> Figure:
    fit = report.fit
    spacing = report.calibration.sideband_spacing_measured if report.calibration is not None else None
    model = spectra.model_curve(spectrum.x, fit.center, fit.fwhm, fit.contrast, fit.sideband_ratio, spacing)
    return plotting.spectrum_figure(spectrum, model)


def cmd_spectrum(config: RunConfig) -> CommandResult:
    """Analyse every input scan, concurrently, reporting in input order."""
    options = config.options
    axis_kind = AxisKind(options.get("x_unit", AxisKind.FREQUENCY_GHZ))

    def analyse(path: Path) -> Tuple[SpectrumReport, Spectrum]:
        spectrum = files.read_spectrum_csv(path, axis_kind)
        report = analyse_spectrum(
            spectrum,
            source=path.name,
            sideband_mhz=options.get("sideband_mhz"),
            roc_um=options.get("roc_um"),
            fsr_thz=options.get("fsr_thz"),
            lambda_nm=options.get("lambda_nm"),
            topology=Topology(options.get("topology", Topology.PC)),
        )
        return report, spectrum

    with ThreadPoolExecutor(max_workers=settings.max_workers) as executor:
        results = list(executor.map(analyse, config.inputs))

    reports = [report for report, _ in results]
    figures = {f"spectrum_{Path(report.source).stem}.svg": spectrum_plot(spectrum, report)
               for report, spectrum in results}
    rows = [report.csv_row() for report in reports]
    text = _table_text(rows)
    warnings = [f"{report.source}: {message}" for report in reports for message in report.warnings]
    if warnings:
        text += "\n\n" + "\n".join(f"warning: {message}" for message in warnings)
    return CommandResult(reports if len(reports) > 1 else reports[0], rows, text, figures)


# profile

def analyse_profile(
    surface: SurfaceMap,
    source: str = "<memory>",
    fit_radius_um: Optional[float] = None,
    include_quartic: bool = True,
) -> Tuple[ProfileReport, ProfileFit]:
    fit = profilometry.fit_mirror_profile(surface, fit_radius_um, include_quartic)
    report = ProfileReport(
        source=source,
        roc_um=fit.roc_um,
        roc_sigma_um=fit.roc_sigma_um,
        center_um=fit.center_um,
        vertex_height_um=fit.vertex_height_um,
        tilt=fit.tilt,
        quartic=fit.quartic_coeff,
        include_quartic=fit.include_quartic,
        rms_residual_nm=fit.rms_residual_nm,
        fit_radius_um=fit.fit_radius_um,
        n_points=fit.n_points,
        depth_um=fit.depth_um,
        aperture_radius_um=fit.aperture_radius_um,
    )
    return report, fit


def cmd_profile(config: RunConfig) -> CommandResult:
    path = config.inputs[0]
    surface = files.read_surface_csv(path)
    report, fit = analyse_profile(
        surface,
        source=path.name,
        fit_radius_um=config.options.get("fit_radius_um"),
        include_quartic=config.options.get("quartic", True),
    )
    x, y, residual = profilometry.profile_residuals(surface, fit)
    row = report.csv_row()
    return CommandResult(report, [row], _key_value_text(row), {"profile.svg": plotting.residual_map(x, y, residual)})


# sweep

def run_sweep(request: SweepRequest) -> Tuple[SweepReport, FinesseCurve]:
    """Finesse-vs-length curve of a calibration preset, optionally with overridden shape-loss parameters."""
    calibration = get_sweep_calibration(request.calibration)
    if calibration is None:
        raise DomainError(f"unknown calibration {request.calibration!r}; choose from {', '.join(SWEEP_CALIBRATIONS)}")
    wavelength = Wavelength(nm=calibration.wavelength_nm)
    template = losses.template_geometry(calibration)
    model = losses.calibrate_shape_excess(template, wavelength, calibration.anchor_short, calibration.anchor_long)
    overrides = {
        "amplitude_ppm": request.shape_amplitude_ppm,
        "reference_length_um": request.shape_reference_um,
        "scale_um": request.shape_scale_um,
        "enabled": request.shape_loss,
    }
    model = model.model_copy(update={key: value for key, value in overrides.items() if value is not None})
    lengths = np.linspace(request.length_min_um, request.length_max_um, request.n_points)
    curve = losses.finesse_vs_length(
        template,
        wavelength,
        lengths,
        shape_model=model,
        additional_excess_ppm=calibration.additional_excess_ppm,
        max_resonant_length_um=calibration.max_resonant_length_um,
    )
    report = SweepReport(
        calibration=calibration.name,
        shape_amplitude_ppm=model.amplitude_ppm,
        shape_reference_um=model.reference_length_um,
        shape_scale_um=model.scale_um,
        shape_loss=model.enabled,
        points=[
            SweepPointReport(
                length_um=point.length_um,
                finesse=point.finesse,
                total_loss_ppm=point.budget.total_ppm,
                scattering_ppm=point.budget.scattering_ppm,
                clipping_ppm=point.budget.clipping_ppm,
                shape_excess_ppm=point.budget.shape_excess_ppm,
            )
            for point in curve.points
        ],
        warnings=curve.warnings,
    )
    return report, curve


def cmd_sweep(config: RunConfig) -> CommandResult:
    request = SweepRequest(**config.options)
    report, curve = run_sweep(request)
    rows = [point.model_dump() for point in report.points]
    text = _table_text(rows) if rows else "no points inside the resonant range"
    if report.warnings:
        text += "\n\n" + "\n".join(f"warning: {message}" for message in report.warnings)
    return CommandResult(report, rows, text, {"sweep.svg": plotting.sweep_figure({report.calibration: curve})})


COMMANDS = {
    "design": cmd_design,
    "table1": cmd_table1,
    "spectrum": cmd_spectrum,
    "profile": cmd_profile,
    "sweep": cmd_sweep,
}
