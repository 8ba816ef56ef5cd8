"""
Round-trip loss budgets and the figures of merit that follow from them:
finesse, quality factor, optical enhancement and Purcell factor.

Losses stay in ppm everywhere; they become probabilities only inside the
finesse conversion.
"""
import logging
import math
from typing import Iterable, List, Optional, Tuple, Union

from scipy.constants import c as SPEED_OF_LIGHT

from app.core.config import settings
from app.core.errors import CalibrationError, DomainError
from app.models.models import (
    CavityGeometry,
    EnhancementReport,
    FinesseCurve,
    FinessePoint,
    LossBudget,
    ShapeExcessModel,
    SweepCalibration,
    Wavelength,
)
from app.services import optics

logger = logging.getLogger(__name__)

PPM = 1e-6


def _total_ppm(loss: Union[LossBudget, float]) -> float:
    return loss.total_ppm if isinstance(loss, LossBudget) else float(loss)


def finesse_from_loss(loss: Union[LossBudget, float]) -> Tuple[float, float]:
    """
    Finesse of a cavity with the given round-trip loss.

    Args:
        loss: LossBudget or a total round-trip loss in ppm

    Returns:
        (exact, approx): the arcsin expression and 2*pi/l
    """
    total_ppm = _total_ppm(loss)
    if total_ppm == 0:
        raise DomainError("lossless cavity: finesse is unbounded")
    if not 0 < total_ppm < 1e6:
        raise DomainError(f"round-trip loss must lie in (0, 1e6) ppm, got {total_ppm:g}")
    loss_fraction = total_ppm * PPM
    root = math.sqrt(1.0 - loss_fraction)
    # 1 - sqrt(1 - l) without cancellation at small l
    numerator = loss_fraction / (1.0 + root)
    exact = math.pi / (2.0 * math.asin(numerator / (2.0 * math.sqrt(root))))
    return exact, 2.0 * math.pi / loss_fraction


def loss_from_finesse(finesse: float) -> float:
    """Round-trip loss in ppm whose exact finesse equals `finesse` (closed-form inverse)."""
    if finesse <= 1:
        raise DomainError(f"finesse must exceed 1, got {finesse:g}")
    r = math.sin(math.pi / (2.0 * finesse))
    # u = (1 - l)^(1/4) solves u^2 + 2ru - 1 = 0
    one_minus_u = r - r * r / (1.0 + math.sqrt(1.0 + r * r))
    u = 1.0 - one_minus_u
    return one_minus_u * (1.0 + u) * (1.0 + u * u) / PPM


def q_from_finesse(finesse: float, length_um: float, wavelength: Wavelength) -> float:
    if finesse <= 0 or length_um <= 0:
        raise DomainError("finesse and length must be positive")
    return 2.0 * length_um * finesse / wavelength.um


def q_from_linewidth(wavelength: Wavelength, fwhm_mhz: float) -> float:
    if fwhm_mhz <= 0:
        raise DomainError(f"linewidth must be positive, got {fwhm_mhz:g} MHz")
    return wavelength.frequency_hz / (fwhm_mhz * 1e6)


def linewidth_from_finesse(finesse: float, length_um: float, medium_index: float = 1.0) -> float:
    """FSR/F in MHz."""
    if finesse <= 0:
        raise DomainError("finesse must be positive")
    return optics.free_spectral_range(length_um, medium_index) * 1e6 / finesse


def photon_lifetime(finesse: float, length_um: float) -> float:
    """Intracavity photon lifetime F*2L/(2*pi*c) in seconds."""
    if finesse <= 0 or length_um <= 0:
        raise DomainError("finesse and length must be positive")
    return finesse * 2.0 * length_um * 1e-6 / (2.0 * math.pi * SPEED_OF_LIGHT)


def enhancement(quality: float, volume_lambda3: float, medium_index: float = 1.0) -> float:
    """Q/(V/lambda^3) scaled by 1/n^3."""
    if quality <= 0 or volume_lambda3 <= 0 or medium_index <= 0:
        raise DomainError("quality, volume and index must be positive")
    return quality / volume_lambda3 / medium_index ** 3


def purcell(enhancement_value: float, branching_ratio: float) -> float:
    if not 0.0 <= branching_ratio <= 1.0:
        raise DomainError(f"branching ratio must lie in [0, 1], got {branching_ratio:g}")
    if enhancement_value < 0:
        raise DomainError("enhancement cannot be negative")
    return 3.0 * enhancement_value * branching_ratio / (4.0 * math.pi ** 2)


def clipping_loss(spot_um: float, aperture_radius_um: float) -> float:
    """Gaussian power outside a circular aperture, per reflection, in ppm."""
    if spot_um <= 0 or aperture_radius_um <= 0:
        raise DomainError("spot size and aperture radius must be positive")
    return math.exp(-2.0 * aperture_radius_um ** 2 / spot_um ** 2) / PPM


def scattering_loss(roughness_nm: float, wavelength: Wavelength) -> float:
    """Total integrated scatter (4*pi*sigma/lambda)^2 per reflection, in ppm."""
    if roughness_nm < 0:
        raise DomainError(f"roughness cannot be negative, got {roughness_nm:g} nm")
    return (4.0 * math.pi * roughness_nm / wavelength.nm) ** 2 / PPM


def loss_budget(
    geom: CavityGeometry,
    wavelength: Wavelength,
    absorption_ppm: Optional[float] = None,
    shape_model: Optional[ShapeExcessModel] = None,
    additional_excess_ppm: float = 0.0,
) -> LossBudget:
    """
    Itemized round-trip loss of one geometry.

    Transmission and coating excess are charged per mirror, scattering per
    mirror reflection and clipping per curved mirror with a known aperture.
    """
    absorption = settings.absorption_ppm if absorption_ppm is None else absorption_ppm
    clipping = 0.0
    spot = None
    for mirror in geom.curved_mirrors:
        aperture = mirror.aperture_um
        if aperture is None:
            continue
        if spot is None:
            spot = optics.spot_on_curved_mirror(geom, wavelength)
        clipping += clipping_loss(spot, aperture)
    shape = shape_model.loss_ppm(geom.effective_length_um) if shape_model is not None else 0.0
    return LossBudget(
        transmission_a_ppm=geom.mirror_a.transmission_ppm,
        transmission_b_ppm=geom.mirror_b.transmission_ppm,
        coating_excess_ppm=sum(mirror.excess_loss_ppm for mirror in geom.mirrors) + additional_excess_ppm,
        absorption_ppm=absorption,
        scattering_ppm=sum(scattering_loss(mirror.roughness_nm, wavelength) for mirror in geom.mirrors),
        clipping_ppm=clipping,
        shape_excess_ppm=shape,
    )


def enhancement_report(
    finesse: float,
    length_um: float,
    wavelength: Wavelength,
    volume_lambda3: float,
    branching_ratio: Optional[float] = None,
    medium_index: float = 1.0,
) -> EnhancementReport:
    eta = settings.branching_ratio if branching_ratio is None else branching_ratio
    quality = q_from_finesse(finesse, length_um, wavelength)
    upsilon = enhancement(quality, volume_lambda3, medium_index)
    return EnhancementReport(
        finesse=finesse,
        quality=quality,
        enhancement=upsilon,
        purcell=purcell(upsilon, eta),
        branching_ratio=eta,
        medium_index=medium_index,
        length_um=length_um,
        wavelength_nm=wavelength.nm,
    )


def template_geometry(calibration: SweepCalibration) -> CavityGeometry:
    """Geometry of a calibration preset at its short anchor length."""
    wavelength = Wavelength(nm=calibration.wavelength_nm)
    return CavityGeometry.from_effective_length(
        calibration.topology,
        calibration.roc_um,
        calibration.anchor_short[0],
        wavelength,
        settings.penetration_lambda,
        depth_um=calibration.depth_um,
        transmission_ppm=calibration.transmission_ppm,
        excess_loss_ppm=calibration.excess_loss_ppm,
        roughness_nm=calibration.roughness_nm,
    )


def calibrate_shape_excess(
    template: CavityGeometry,
    wavelength: Wavelength,
    anchor_short: Tuple[float, float],
    anchor_long: Tuple[float, float],
) -> ShapeExcessModel:
    """
    Fit A*exp((L - L0)/s) through two anchors.

    Args:
        template: Geometry whose mirrors carry the fixed coating losses
        wavelength: Operating wavelength
        anchor_short: (length um, measured finesse)
        anchor_long: (length um, total round-trip loss ppm)

    Returns:
        ShapeExcessModel with L0 at the long anchor
    """
    (short_length, short_finesse), (long_length, long_loss) = anchor_short, anchor_long
    if not short_length < long_length:
        raise CalibrationError("the finesse anchor must lie at a shorter length than the loss anchor")

    def base_loss(length_um: float) -> float:
        return loss_budget(template.with_effective_length(length_um), wavelength).total_ppm

    short_excess = loss_from_finesse(short_finesse) - base_loss(short_length)
    long_excess = long_loss - base_loss(long_length)
    if short_excess <= 0 or long_excess <= short_excess:
        raise CalibrationError(
            f"anchors leave no growing shape loss: {short_excess:.4g} ppm at {short_length:g} um, "
            f"{long_excess:.4g} ppm at {long_length:g} um"
        )
    scale = (long_length - short_length) / math.log(long_excess / short_excess)
    logger.debug("Shape loss calibrated: A=%.4g ppm, L0=%g um, s=%.4g um", long_excess, long_length, scale)
    return ShapeExcessModel(amplitude_ppm=long_excess, reference_length_um=long_length, scale_um=scale)


def finesse_vs_length(
    template: CavityGeometry,
    wavelength: Wavelength,
    lengths_um: Iterable[float],
    shape_model: Optional[ShapeExcessModel] = None,
    additional_excess_ppm: float = 0.0,
    max_resonant_length_um: Optional[float] = None,
) -> FinesseCurve:
    """
    Finesse at each effective length of a sweep.

    Points at or beyond the stability limit alpha*R, or beyond the longest
    length at which a resonance is observable, are dropped and reported in
    the curve's warnings.
    """
    model = shape_model if shape_model is not None else ShapeExcessModel(enabled=False)
    limit = template.alpha * template.roc_um
    lengths = sorted(float(length) for length in lengths_um)
    points: List[FinessePoint] = []
    unstable: List[float] = []
    dark: List[float] = []
    for length in lengths:
        if length <= 2.0 * template.penetration_per_mirror_um:
            raise DomainError(f"sweep length {length:g} um is shorter than the mirror penetration")
        if length >= limit:
            unstable.append(length)
            continue
        if max_resonant_length_um is not None and length > max_resonant_length_um:
            dark.append(length)
            continue
        geom = template.with_effective_length(length)
        budget = loss_budget(geom, wavelength, shape_model=model, additional_excess_ppm=additional_excess_ppm)
        exact, _ = finesse_from_loss(budget)
        points.append(FinessePoint(length_um=length, finesse=exact, budget=budget))

    warnings: List[str] = []
    if unstable:
        warnings.append(
            f"truncated {len(unstable)} point(s) at L >= {limit:g} um (alpha*R): no stable mode"
        )
    if dark:
        warnings.append(
            f"truncated {len(dark)} point(s) beyond {max_resonant_length_um:g} um: no resonance observed"
        )
    for message in warnings:
        logger.warning("Sweep %s", message)
    return FinesseCurve(points=points, shape_model=model, warnings=warnings)


def sweep_calibration(
    calibration: SweepCalibration,
    lengths_um: Iterable[float],
    shape_enabled: bool = True,
) -> FinesseCurve:
    """Finesse-vs-length curve of a preset, shape loss calibrated on the preset's anchors."""
    wavelength = Wavelength(nm=calibration.wavelength_nm)
    template = template_geometry(calibration)
    model = calibrate_shape_excess(template, wavelength, calibration.anchor_short, calibration.anchor_long)
    if not shape_enabled:
        model = model.model_copy(update={"enabled": False})
    return finesse_vs_length(
        template,
        wavelength,
        lengths_um,
        shape_model=model,
        additional_excess_ppm=calibration.additional_excess_ppm,
        max_resonant_length_um=calibration.max_resonant_length_um,
    )
