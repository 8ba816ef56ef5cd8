"""
Laser-scan analysis: synthetic scans, dip detection, sideband calibration,
Lorentzian linewidth fits and mode-ladder assignment.

Signals are reflected power normalized to 1 off resonance, so every
resonance is a dip. Wavelength scans are always fitted on the exact
optical-frequency axis nu = c/lambda.
"""
import logging
import math
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from lmfit import Model
from lmfit.lineshapes import lorentzian
from scipy.constants import c as SPEED_OF_LIGHT
from scipy.signal import find_peaks, peak_widths

from app.core.config import settings
from app.core.errors import AmbiguityError, CalibrationError, DomainError, FitError, NoSolutionError
from app.models.models import (
    AxisKind,
    CalibrationResult,
    CavityGeometry,
    LadderResult,
    LorentzianFit,
    ModeIndex,
    ResonancePeak,
    Spectrum,
    Topology,
    Wavelength,
)
from app.services import optics
from app.services.optics import LengthSolution

logger = logging.getLogger(__name__)

MIN_POINTS_IN_CORE = 8
HIGHER_ORDER_CONTRAST = 0.6
MIN_DIP_WIDTH = 2


def _unit_dip(x, center, fwhm):
    """Lorentzian normalized to 1 at its center."""
    half = fwhm / 2.0
    return math.pi * half * lorentzian(x, 1.0, center, half)


def reflection_dip(x, center, fwhm, contrast, baseline=1.0):
    return baseline - contrast * _unit_dip(x, center, fwhm)


def reflection_dip_with_sidebands(x, center, fwhm, contrast, ratio, spacing_left, spacing_right, baseline=1.0):
    """Carrier dip plus two satellites of relative depth `ratio`."""
    satellites = _unit_dip(x, center - spacing_left, fwhm) + _unit_dip(x, center + spacing_right, fwhm)
    return baseline - contrast * (_unit_dip(x, center, fwhm) + ratio * satellites)


def _nm_ghz(value):
    """nu [GHz] = c/lambda [nm]; the same map converts back."""
    return SPEED_OF_LIGHT / value


def synthesize_scan(
    geom: CavityGeometry,
    wavelength: Wavelength,
    linewidth_mhz: float,
    wavelength_range_nm: Optional[Tuple[float, float]] = None,
    frequency_span_mhz: Optional[Tuple[float, float]] = None,
    axis_kind: Optional[AxisKind] = None,
    n_points: int = 2001,
    contrast: float = 0.8,
    sideband: Optional[Tuple[float, float]] = None,
    noise_sigma: float = 0.0,
    seed: Optional[int] = None,
) -> Spectrum:
    """
    Reflection scan of a cavity whose TEM00 resonance sits at `wavelength`.

    Exactly one of `wavelength_range_nm` (a mode-ladder scan) or
    `frequency_span_mhz` (a detuning scan around TEM00) is given. Every
    ladder mode nu00 + k*FSR + m*dT with m <= max_mode_order is drawn with
    contrast * 0.6^m; `sideband` = (f_mod MHz, relative depth) adds
    satellites at +-f_mod around each mode.

    Axis defaults: wavelength_nm for a range scan, frequency_GHz for a
    span scan. A span scan on sample_index has x = 0..n-1.
    """
    if (wavelength_range_nm is None) == (frequency_span_mhz is None):
        raise DomainError("give exactly one of a wavelength range or a frequency span")
    if linewidth_mhz <= 0 or n_points < 16:
        raise DomainError("linewidth must be positive and the scan needs at least 16 points")
    if not 0 < contrast <= 1:
        raise DomainError(f"contrast must lie in (0, 1], got {contrast:g}")

    nu0_ghz = wavelength.frequency_hz * 1e-9
    if wavelength_range_nm is not None:
        kind = AxisKind(axis_kind or AxisKind.WAVELENGTH_NM)
        low_nm, high_nm = sorted(wavelength_range_nm)
        if kind is AxisKind.WAVELENGTH_NM:
            x = np.linspace(low_nm, high_nm, n_points)
            offsets = _nm_ghz(x) - nu0_ghz
        elif kind is AxisKind.FREQUENCY_GHZ:
            x = np.linspace(_nm_ghz(high_nm), _nm_ghz(low_nm), n_points)
            offsets = x - nu0_ghz
        else:
            raise DomainError("a wavelength-range scan needs a wavelength or frequency axis")
    else:
        kind = AxisKind(axis_kind or AxisKind.FREQUENCY_GHZ)
        if kind is AxisKind.WAVELENGTH_NM:
            raise DomainError("a frequency-span scan needs a frequency or sample axis")
        low_mhz, high_mhz = sorted(frequency_span_mhz)
        offsets = np.linspace(low_mhz, high_mhz, n_points) * 1e-3
        x = nu0_ghz + offsets if kind is AxisKind.FREQUENCY_GHZ else np.arange(n_points, dtype=float)

    fsr_ghz = optics.free_spectral_range(geom.effective_length_um, geom.medium_index) * 1e3
    spacing_ghz = optics.transverse_mode_spacing(geom, 1) * 1e3
    span_low, span_high = float(offsets.min()), float(offsets.max())
    fwhm_ghz = linewidth_mhz * 1e-3
    reach = settings.max_mode_order * spacing_ghz
    first = math.floor((span_low - reach) / fsr_ghz) - 1
    last = math.ceil(span_high / fsr_ghz) + 1

    signal = np.ones_like(offsets)
    in_span = 0
    for k in range(first, last + 1):
        for order in range(settings.max_mode_order + 1):
            center = k * fsr_ghz + order * spacing_ghz
            depth = contrast * HIGHER_ORDER_CONTRAST ** order
            dip = _unit_dip(offsets, center, fwhm_ghz)
            if sideband is not None:
                f_mod_ghz, ratio = sideband[0] * 1e-3, sideband[1]
                dip = dip + ratio * (_unit_dip(offsets, center - f_mod_ghz, fwhm_ghz)
                                     + _unit_dip(offsets, center + f_mod_ghz, fwhm_ghz))
            signal -= depth * dip
            if span_low <= center <= span_high:
                in_span += 1
    if in_span == 0:
        raise DomainError("no resonance in span")

    if noise_sigma > 0:
        rng = np.random.default_rng(seed)
        signal = signal + rng.normal(0.0, noise_sigma, signal.size)
    signal = np.clip(signal, 0.0, 1.0 + 3.0 * noise_sigma)
    return Spectrum(axis_kind=kind, x=x, signal=signal, noise_sigma=noise_sigma)


def detect_peaks(spec: Spectrum, min_contrast: Optional[float] = None) -> List[ResonancePeak]:
    """
    Coarse dips sorted by center.

    A dip must reach `min_contrast` below the unit baseline, stand out by as
    much from its surroundings, and span MIN_DIP_WIDTH samples at half depth.
    """
    threshold = settings.min_contrast if min_contrast is None else min_contrast
    depth = 1.0 - spec.signal
    indices, _ = find_peaks(depth, height=threshold, prominence=threshold, width=MIN_DIP_WIDTH)
    if indices.size == 0:
        return []
    _, _, left, right = peak_widths(depth, indices, rel_height=0.5)
    samples = np.arange(spec.n_points, dtype=float)
    left_x = np.interp(left, samples, spec.x)
    right_x = np.interp(right, samples, spec.x)
    peaks = []
    for index, x_left, x_right in zip(indices, left_x, right_x):
        contrast = float(depth[index])
        fwhm = abs(float(x_right - x_left))
        if contrast <= 0 or fwhm <= 0:
            continue
        peaks.append(ResonancePeak(center=float(spec.x[index]), fwhm=fwhm, contrast=min(contrast, 1.0)))
    peaks.sort(key=lambda peak: peak.center)
    logger.debug("Detected %d dip(s) above contrast %.3g", len(peaks), threshold)
    return peaks


def _frequency_frame(spec: Spectrum, seed: ResonancePeak) -> Tuple[np.ndarray, np.ndarray, float, float]:
    """x, signal, seed center and seed fwhm on the axis the fit runs on."""
    if spec.axis_kind is AxisKind.WAVELENGTH_NM:
        converted = spec.in_frequency()
        center = _nm_ghz(seed.center)
        fwhm = SPEED_OF_LIGHT * seed.fwhm / seed.center ** 2
        return converted.x, converted.signal, center, fwhm
    return spec.x, spec.signal, seed.center, seed.fwhm


def _run_dip_fit(
    x: np.ndarray,
    signal: np.ndarray,
    center: float,
    fwhm: float,
    contrast: float,
    sideband_spacing: Optional[float] = None,
    sideband_ratio: float = 0.3,
    independent_sides: bool = False,
    exclude: Sequence[Tuple[float, float]] = (),
    window_fwhm: float = 4.0,
):
    """
    Least-squares dip fit in coordinates centered on the seed and scaled by its fwhm.

    Returns:
        (ModelResult, number of points used, rms residual)
    """
    if contrast <= 0:
        raise FitError(f"degenerate seed: contrast {contrast:.3g} leaves no dip to fit")
    half_window = window_fwhm * fwhm + (abs(sideband_spacing) if sideband_spacing else 0.0)
    keep = np.abs(x - center) <= half_window
    for low, high in exclude:
        keep &= ~((x >= min(low, high)) & (x <= max(low, high)))
    core = keep & (np.abs(x - center) <= 2.0 * fwhm)
    if int(core.sum()) < MIN_POINTS_IN_CORE:
        raise FitError(f"only {int(core.sum())} point(s) within 2 fwhm of the dip; need {MIN_POINTS_IN_CORE}")

    u = (x[keep] - center) / fwhm
    data = signal[keep]
    if sideband_spacing is None:
        model = Model(reflection_dip)
        params = model.make_params(center=0.0, fwhm=1.0, contrast=contrast, baseline=1.0)
    else:
        spacing = abs(sideband_spacing) / fwhm
        model = Model(reflection_dip_with_sidebands)
        params = model.make_params(center=0.0, fwhm=1.0, contrast=contrast, ratio=sideband_ratio,
                                   spacing_left=spacing, spacing_right=spacing, baseline=1.0)
        if not independent_sides:
            params["spacing_right"].set(expr="spacing_left")
    params["baseline"].set(vary=False)
    params["fwhm"].set(min=1e-9)

    n_varys = sum(1 for param in params.values() if param.vary and not param.expr)
    result = model.fit(
        data,
        params,
        x=u,
        method="leastsq",
        max_nfev=settings.fit_max_iterations * (n_varys + 1),
        fit_kws={"xtol": settings.fit_tolerance, "ftol": settings.fit_tolerance},
    )
    rms = float(np.sqrt(np.mean(result.residual ** 2)))
    if not result.success:
        raise FitError(f"dip fit did not converge after {result.nfev} evaluations: {result.message}", rms)
    if result.params["contrast"].value <= 0:
        raise FitError("degenerate dip: fitted contrast is not positive", rms)
    return result, int(keep.sum()), rms


def _stderr(result, name: str) -> float:
    value = result.params[name].stderr
    return float("nan") if value is None else float(value)


def fit_lorentzian(
    spec: Spectrum,
    seed: ResonancePeak,
    sideband_spacing: Optional[float] = None,
    exclude: Sequence[Tuple[float, float]] = (),
    calibration: Optional[CalibrationResult] = None,
    window_fwhm: float = 4.0,
) -> LorentzianFit:
    """
    Fit s(x) = 1 - c*(G/2)^2/((x - x0)^2 + (G/2)^2) around a seed dip.

    Args:
        spec: Scan to fit
        seed: Coarse dip, usually from detect_peaks
        sideband_spacing: Carrier-to-sideband spacing in axis units; fits the
            satellites as separate components with a free depth ratio
        exclude: Axis intervals masked out of the fit
        calibration: Sideband scale; sets the MHz width on a raw or frequency axis
        window_fwhm: Half-width of the fit window in seed linewidths

    Returns:
        LorentzianFit in the spectrum's axis units, plus the width in MHz
        whenever the axis is absolute or calibrated
    """
    x, signal, center, fwhm = _frequency_frame(spec, seed)
    spacing = sideband_spacing
    masked = exclude
    if spec.axis_kind is AxisKind.WAVELENGTH_NM:
        if spacing is not None:
            spacing = SPEED_OF_LIGHT * spacing / seed.center ** 2
        masked = [(_nm_ghz(low), _nm_ghz(high)) for low, high in exclude]
    result, n_points, rms = _run_dip_fit(
        x, signal, center, fwhm, seed.contrast,
        sideband_spacing=spacing, exclude=masked, window_fwhm=window_fwhm,
    )
    params = result.params
    fit_center = center + params["center"].value * fwhm
    fit_fwhm = abs(params["fwhm"].value) * fwhm
    center_sigma = _stderr(result, "center") * fwhm
    fwhm_sigma = _stderr(result, "fwhm") * fwhm
    fit_spacing = abs(params["spacing_left"].value) * fwhm if spacing is not None else None
    ratio = float(params["ratio"].value) if spacing is not None else None

    fwhm_mhz = fwhm_sigma_mhz = None
    if calibration is not None and spec.axis_kind is not AxisKind.WAVELENGTH_NM:
        fwhm_mhz = fit_fwhm * calibration.scale_mhz_per_unit
        fwhm_sigma_mhz = fwhm_sigma * calibration.scale_mhz_per_unit
    elif spec.axis_kind is not AxisKind.SAMPLE_INDEX:
        fwhm_mhz, fwhm_sigma_mhz = fit_fwhm * 1e3, fwhm_sigma * 1e3

    if spec.axis_kind is AxisKind.WAVELENGTH_NM:
        # back to the wavelength axis: exact for the center, local for widths
        center_nm = _nm_ghz(fit_center)
        per_ghz = center_nm ** 2 / SPEED_OF_LIGHT
        fit_center, center_sigma = center_nm, center_sigma * per_ghz
        fit_fwhm, fwhm_sigma = fit_fwhm * per_ghz, fwhm_sigma * per_ghz
        if fit_spacing is not None:
            fit_spacing *= per_ghz

    return LorentzianFit(
        axis_kind=spec.axis_kind,
        center=fit_center,
        center_sigma=center_sigma,
        fwhm=fit_fwhm,
        fwhm_sigma=fwhm_sigma,
        fwhm_mhz=fwhm_mhz,
        fwhm_sigma_mhz=fwhm_sigma_mhz,
        contrast=float(params["contrast"].value),
        contrast_sigma=_stderr(result, "contrast"),
        sideband_ratio=ratio,
        sideband_spacing=fit_spacing,
        residual_rms=rms,
        n_points=n_points,
        n_evaluations=int(result.nfev),
    )


def carrier_and_sidebands(peaks: List[ResonancePeak]) -> Tuple[ResonancePeak, ResonancePeak, ResonancePeak]:
    if len(peaks) < 3:
        raise CalibrationError(f"sidebands not found: {len(peaks)} dip(s) detected, need a carrier and two sidebands")
    carrier = max(peaks, key=lambda peak: peak.contrast)
    lower = [peak for peak in peaks if peak.center < carrier.center]
    upper = [peak for peak in peaks if peak.center > carrier.center]
    if not lower or not upper:
        raise CalibrationError("sidebands not found on both sides of the carrier dip")
    return carrier, lower[-1], upper[0]


def calibrate_with_sidebands(
    spec: Spectrum,
    modulation_mhz: float,
    peaks: Optional[List[ResonancePeak]] = None,
) -> CalibrationResult:
    """
    Frequency scale of the scan axis from the known sideband modulation.

    The carrier is the deepest dip and the sidebands its nearest neighbours.
    All three are refined in one fit with independent left and right
    spacings; the scale is f_mod over their mean.
    """
    if modulation_mhz <= 0:
        raise DomainError("modulation frequency must be positive")
    if spec.axis_kind is AxisKind.WAVELENGTH_NM:
        raise DomainError("sideband calibration needs a frequency or raw axis; convert the wavelength scan first")
    found = detect_peaks(spec) if peaks is None else sorted(peaks, key=lambda peak: peak.center)
    carrier, left, right = carrier_and_sidebands(found)

    step = float(np.median(np.abs(np.diff(spec.x))))
    coarse_left, coarse_right = carrier.center - left.center, right.center - carrier.center
    if min(coarse_left, coarse_right) <= 2.0 * step:
        raise CalibrationError(
            f"sidebands unresolved: spacing {min(coarse_left, coarse_right):.4g} is within 2 samples"
        )
    ratio = 0.5 * (left.contrast + right.contrast) / carrier.contrast
    try:
        result, _, _ = _run_dip_fit(
            spec.x, spec.signal, carrier.center, carrier.fwhm, carrier.contrast,
            sideband_spacing=0.5 * (coarse_left + coarse_right),
            sideband_ratio=ratio,
            independent_sides=True,
        )
    except FitError as exc:
        raise CalibrationError(f"sideband fit failed: {exc}") from exc

    spacing_left = abs(result.params["spacing_left"].value) * carrier.fwhm
    spacing_right = abs(result.params["spacing_right"].value) * carrier.fwhm
    mean = 0.5 * (spacing_left + spacing_right)
    residual = abs(spacing_left - spacing_right) / mean
    logger.info("Sideband calibration: %.6g MHz per unit (asymmetry %.2e)", modulation_mhz / mean, residual)
    return CalibrationResult(
        scale_mhz_per_unit=modulation_mhz / mean,
        sideband_spacing_measured=mean,
        spacing_left=spacing_left,
        spacing_right=spacing_right,
        residual=residual,
    )


def finesse_from_linewidth(fsr_thz: float, fwhm_mhz: float) -> float:
    """F = FSR / FWHM."""
    if fsr_thz <= 0 or fwhm_mhz <= 0:
        raise DomainError("FSR and linewidth must be positive")
    return fsr_thz * 1e6 / fwhm_mhz


def _peak_frequencies_thz(peaks: Sequence[ResonancePeak], axis_kind: AxisKind) -> np.ndarray:
    centers = np.array([peak.center for peak in peaks], dtype=float)
    if axis_kind is AxisKind.WAVELENGTH_NM:
        return _nm_ghz(centers) * 1e-3
    if axis_kind is AxisKind.FREQUENCY_GHZ:
        return centers * 1e-3
    raise DomainError("mode-ladder assignment needs a wavelength or frequency axis")


def _ladder_distances(offsets_thz: np.ndarray, fsr_thz: float, spacing_thz: float, max_order: int):
    """Distance of each peak from its nearest ladder rung in units of the transverse spacing, and that rung."""
    distances = np.empty(offsets_thz.size)
    assignments = []
    for index, offset in enumerate(offsets_thz):
        best = (math.inf, 0, 0)
        for order in range(max_order + 1):
            rung = int(round((offset - order * spacing_thz) / fsr_thz))
            distance = abs(offset - rung * fsr_thz - order * spacing_thz)
            if distance < best[0]:
                best = (distance, order, rung)
        distances[index] = best[0] / spacing_thz
        assignments.append((best[1], best[2]))
    return distances, assignments


class _LadderCandidate(NamedTuple):
    matched: np.ndarray
    residual: float
    fundamental_thz: float
    solution: LengthSolution
    fsr_thz: float
    spacing_thz: float
    offsets_thz: np.ndarray
    assignments: List[Tuple[int, int]]

    @property
    def rank(self) -> Tuple[int, float, float]:
        return -int(self.matched.sum()), self.residual, self.fundamental_thz


def identify_mode_ladder(
    peaks: Sequence[ResonancePeak],
    roc_um: float,
    axis_kind: AxisKind,
    topology: Topology = Topology.PC,
    bracket: Optional[Tuple[float, float]] = None,
) -> LadderResult:
    """
    Assign transverse orders to a set of resonances and infer the cavity length.

    Every peak is tried as TEM00 and every higher-frequency peak as its p+q=1
    partner. The pair fixes L through the transverse splitting, and the other
    peaks are matched against the ladder nu00 + k*FSR + m*dT within
    `ladder_tolerance` of the spacing. The pair explaining the most peaks
    wins, then the smaller worst offset, then the lower TEM00 frequency.
    Peaks off every rung are returned as `unassigned`.
    """
    topology = Topology(topology)
    if len(peaks) < 2:
        raise AmbiguityError(f"insufficient modes: {len(peaks)} peak(s), need TEM00 and a higher-order mode")
    frequencies = _peak_frequencies_thz(peaks, axis_kind)
    tolerance = settings.ladder_tolerance

    candidates: List[_LadderCandidate] = []
    notes = []
    for fundamental in np.argsort(frequencies):
        offsets = frequencies - frequencies[fundamental]
        for partner in np.argsort(offsets):
            spacing = float(offsets[partner])
            if spacing <= 0:
                continue
            try:
                solution = optics.length_from_splitting(roc_um, spacing, 1, bracket, topology)
            except NoSolutionError:
                continue
            fsr = optics.free_spectral_range(solution.length_um)
            distances, assignments = _ladder_distances(offsets, fsr, spacing, settings.max_mode_order)
            matched = distances <= tolerance
            candidates.append(_LadderCandidate(matched, float(distances[matched].max()), float(frequencies[fundamental]),
                                               solution, fsr, spacing, offsets, assignments))
            notes.append(f"TEM00 {peaks[fundamental].center:.6g} + partner {peaks[partner].center:.6g}: "
                         f"L={solution.length_um:.4g} um, {int(matched.sum())}/{len(peaks)} peak(s) on the ladder")
    if not candidates:
        raise AmbiguityError("no peak pair gives a cavity length in the bracket", notes)

    best = min(candidates, key=lambda candidate: candidate.rank)
    n_matched = int(best.matched.sum())
    if len(peaks) >= 3 and n_matched < 3:
        raise AmbiguityError(
            f"inconsistent ladder: no assignment places more than its defining pair within {tolerance:g} of the spacing",
            notes,
        )
    rivals = [candidate.solution.length_um for candidate in candidates if int(candidate.matched.sum()) == n_matched]
    if max(rivals) - min(rivals) > tolerance * best.solution.length_um:
        raise AmbiguityError(
            f"ambiguous ladder: lengths {min(rivals):.4g} to {max(rivals):.4g} um explain {n_matched} peak(s) equally",
            notes,
        )

    assigned, unassigned = [], []
    for peak, (order, _), on_ladder in zip(peaks, best.assignments, best.matched):
        if on_ladder:
            assigned.append(peak.model_copy(update={"assignment": ModeIndex(p=order, q=0)}))
        else:
            unassigned.append(peak)
    if unassigned:
        logger.warning("%d peak(s) off the mode ladder: %s", len(unassigned),
                       ", ".join(f"{peak.center:.8g}" for peak in unassigned))

    fsr_length = agreement = None
    fundamentals = [(rung, offset) for (order, rung), offset, on_ladder
                    in zip(best.assignments, best.offsets_thz, best.matched) if on_ladder and order == 0]
    if len({rung for rung, _ in fundamentals}) > 1:
        (first_rung, first), (last_rung, last) = min(fundamentals), max(fundamentals)
        measured_fsr = (last - first) / (last_rung - first_rung)
        fsr_length = SPEED_OF_LIGHT / (2.0 * measured_fsr * 1e12) * 1e6
        agreement = fsr_length / best.solution.length_um - 1.0
        logger.info("FSR length %.4g um vs splitting length %.4g um", fsr_length, best.solution.length_um)

    return LadderResult(
        peaks=assigned,
        unassigned=unassigned,
        length_um=best.solution.length_um,
        root_count=best.solution.root_count,
        fsr_thz=best.fsr_thz,
        transverse_spacing_thz=best.spacing_thz,
        consistency_residual=best.residual,
        fsr_length_um=fsr_length,
        length_agreement=agreement,
    )


def model_curve(
    x: np.ndarray,
    center: float,
    fwhm: float,
    contrast: float,
    sideband_ratio: Optional[float] = None,
    sideband_spacing: Optional[float] = None,
) -> np.ndarray:
    """Fitted dip on an axis in the fit's units (local widths on a wavelength axis)."""
    if sideband_ratio is None or sideband_spacing is None:
        return reflection_dip(x, center, fwhm, contrast)
    return reflection_dip_with_sidebands(x, center, fwhm, contrast, sideband_ratio, sideband_spacing, sideband_spacing)
