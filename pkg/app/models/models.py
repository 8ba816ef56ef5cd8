"""
Domain models: cavity geometry, mode quantities, loss budgets and
measurement data. All models are immutable after construction.
"""
import math
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field, field_validator, model_validator
from scipy.constants import c as SPEED_OF_LIGHT


class Topology(str, Enum):
    """Cavity topology; the value of `alpha` folds CC onto PC."""

    PC = "pc"
    CC = "cc"

    @property
    def alpha(self) -> int:
        return 1 if self is Topology.PC else 2


class AxisKind(str, Enum):
    """Unit of a spectrum's x column."""

    WAVELENGTH_NM = "wavelength_nm"
    FREQUENCY_GHZ = "frequency_GHz"
    SAMPLE_INDEX = "sample_index"


class Wavelength(BaseModel):
    """Vacuum wavelength."""

    model_config = ConfigDict(frozen=True)

    nm: float = Field(..., gt=0, description="Vacuum wavelength in nm")

    @property
    def um(self) -> float:
        return self.nm * 1e-3

    @property
    def frequency_hz(self) -> float:
        return SPEED_OF_LIGHT / (self.nm * 1e-9)

    @property
    def frequency_thz(self) -> float:
        return self.frequency_hz * 1e-12


class MirrorSpec(BaseModel):
    """One mirror's geometry and optical losses."""

    model_config = ConfigDict(frozen=True)

    roc_um: float = Field(..., gt=0, description="Radius of curvature; math.inf for a flat mirror")
    depth_um: float = Field(default=0.0, ge=0, description="Depression depth")
    aperture_radius_um: Optional[float] = Field(default=None, gt=0, description="Lateral aperture radius")
    transmission_ppm: float = Field(default=0.0, ge=0)
    excess_loss_ppm: float = Field(default=0.0, ge=0)
    roughness_nm: float = Field(default=0.0, ge=0, description="RMS surface roughness")
    flat: bool = False

    @model_validator(mode="after")
    def _check_shape(self) -> "MirrorSpec":
        if self.flat != math.isinf(self.roc_um):
            raise ValueError("a mirror is flat exactly when its roc is infinite")
        if not self.flat and self.depth_um >= self.roc_um:
            raise ValueError(f"depth {self.depth_um} um must be below roc {self.roc_um} um")
        return self

    @classmethod
    def curved(cls, roc_um: float, **kwargs) -> "MirrorSpec":
        return cls(roc_um=roc_um, **kwargs)

    @classmethod
    def flat_mirror(cls, **kwargs) -> "MirrorSpec":
        return cls(roc_um=math.inf, flat=True, **kwargs)

    @property
    def aperture_um(self) -> Optional[float]:
        """Given aperture, else the spherical-cap rim radius; None when unknown."""
        if self.aperture_radius_um is not None:
            return self.aperture_radius_um
        if self.flat or self.depth_um <= 0:
            return None
        return math.sqrt(2.0 * self.roc_um * self.depth_um - self.depth_um ** 2)

    @property
    def g_factor_per_um(self) -> float:
        """1/R, zero for a flat mirror so that g = 1 - L/R is exactly 1."""
        return 0.0 if self.flat else 1.0 / self.roc_um


class CavityGeometry(BaseModel):
    """Topology, mirrors and spacing of a plano-concave or symmetric concave-concave cavity."""

    model_config = ConfigDict(frozen=True)

    topology: Topology
    mirror_a: MirrorSpec
    mirror_b: MirrorSpec
    geometric_spacing_um: float = Field(..., gt=0)
    penetration_per_mirror_um: float = Field(default=0.0, ge=0)
    medium_index: float = Field(default=1.0, gt=0)

    @model_validator(mode="after")
    def _check_topology(self) -> "CavityGeometry":
        if self.mirror_a.flat:
            raise ValueError("mirror_a must be the curved mirror")
        if self.topology is Topology.PC and not self.mirror_b.flat:
            raise ValueError("a plano-concave cavity needs a flat mirror_b")
        if self.topology is Topology.CC:
            if self.mirror_b.flat:
                raise ValueError("a concave-concave cavity needs two curved mirrors")
            if not math.isclose(self.mirror_a.roc_um, self.mirror_b.roc_um, rel_tol=1e-12):
                raise ValueError("only symmetric concave-concave cavities are supported")
        return self

    @classmethod
    def build(
        cls,
        topology: Topology,
        roc_um: float,
        spacing_um: float,
        wavelength: Wavelength,
        penetration_lambda: float = 0.8,
        depth_um: float = 0.0,
        transmission_ppm: float = 0.0,
        excess_loss_ppm: float = 0.0,
        roughness_nm: float = 0.0,
        medium_index: float = 1.0,
    ) -> "CavityGeometry":
        """Geometry from the geometric mirror spacing; penetration is added per mirror."""
        topology = Topology(topology)
        losses = dict(
            transmission_ppm=transmission_ppm,
            excess_loss_ppm=excess_loss_ppm,
            roughness_nm=roughness_nm,
        )
        curved = MirrorSpec.curved(roc_um, depth_um=depth_um, **losses)
        other = curved if topology is Topology.CC else MirrorSpec.flat_mirror(**losses)
        return cls(
            topology=topology,
            mirror_a=curved,
            mirror_b=other,
            geometric_spacing_um=spacing_um,
            penetration_per_mirror_um=penetration_lambda * wavelength.um,
            medium_index=medium_index,
        )

    @classmethod
    def from_effective_length(cls, topology: Topology, roc_um: float, length_um: float,
                              wavelength: Wavelength, penetration_lambda: float = 0.8,
                              **kwargs) -> "CavityGeometry":
        """Geometry whose effective length (penetration included) equals `length_um`."""
        spacing = length_um - 2.0 * penetration_lambda * wavelength.um
        if spacing <= 0:
            raise ValueError(
                f"effective length {length_um} um leaves no gap after "
                f"{penetration_lambda} wavelengths of penetration per mirror"
            )
        return cls.build(topology, roc_um, spacing, wavelength, penetration_lambda, **kwargs)

    def with_effective_length(self, length_um: float) -> "CavityGeometry":
        spacing = length_um - 2.0 * self.penetration_per_mirror_um
        if spacing <= 0:
            raise ValueError(f"effective length {length_um} um is shorter than the penetration")
        return self.model_copy(update={"geometric_spacing_um": spacing})

    @property
    def alpha(self) -> int:
        return self.topology.alpha

    @property
    def roc_um(self) -> float:
        return self.mirror_a.roc_um

    @property
    def effective_length_um(self) -> float:
        return self.geometric_spacing_um + 2.0 * self.penetration_per_mirror_um

    @property
    def curved_mirrors(self) -> List[MirrorSpec]:
        return [mirror for mirror in (self.mirror_a, self.mirror_b) if not mirror.flat]

    @property
    def mirrors(self) -> Tuple[MirrorSpec, MirrorSpec]:
        return self.mirror_a, self.mirror_b


class ModeIndex(BaseModel):
    """Hermite-Gaussian transverse indices."""

    model_config = ConfigDict(frozen=True)

    p: int = Field(..., ge=0)
    q: int = Field(default=0, ge=0)

    @property
    def order(self) -> int:
        return self.p + self.q


class GaussianMode(BaseModel):
    """Derived quantities of the fundamental cavity mode."""

    model_config = ConfigDict(frozen=True)

    wavelength_nm: float
    effective_length_um: float
    g_product: float
    waist_um: float
    rayleigh_um: float
    fsr_thz: float
    transverse_spacing_thz: float = Field(..., description="Spacing per unit of p+q")
    mode_volume_um3: float
    mode_volume_lambda3: float


class LossBudget(BaseModel):
    """Round-trip losses per mechanism, in ppm."""

    model_config = ConfigDict(frozen=True)

    transmission_a_ppm: float = Field(default=0.0, ge=0)
    transmission_b_ppm: float = Field(default=0.0, ge=0)
    coating_excess_ppm: float = Field(default=0.0, ge=0)
    absorption_ppm: float = Field(default=0.0, ge=0)
    scattering_ppm: float = Field(default=0.0, ge=0)
    clipping_ppm: float = Field(default=0.0, ge=0)
    shape_excess_ppm: float = Field(default=0.0, ge=0)

    @computed_field
    @property
    def total_ppm(self) -> float:
        return (
            self.transmission_a_ppm
            + self.transmission_b_ppm
            + self.coating_excess_ppm
            + self.absorption_ppm
            + self.scattering_ppm
            + self.clipping_ppm
            + self.shape_excess_ppm
        )

    @model_validator(mode="after")
    def _check_total(self) -> "LossBudget":
        if self.total_ppm >= 1e6:
            raise ValueError(f"round-trip loss {self.total_ppm:g} ppm reaches 100 %")
        return self


class EnhancementReport(BaseModel):
    """Figures of merit of one cavity."""

    model_config = ConfigDict(frozen=True)

    finesse: float = Field(..., ge=0)
    quality: float = Field(..., ge=0)
    enhancement: float = Field(..., ge=0)
    purcell: float = Field(..., ge=0)
    branching_ratio: float = Field(..., ge=0, le=1)
    medium_index: float = Field(default=1.0, gt=0)
    length_um: Optional[float] = Field(default=None, gt=0)
    wavelength_nm: Optional[float] = Field(default=None, gt=0)

    @model_validator(mode="after")
    def _check_quality(self) -> "EnhancementReport":
        if self.length_um is not None and self.wavelength_nm is not None:
            expected = 2.0 * self.length_um * self.finesse / (self.wavelength_nm * 1e-3)
            if not math.isclose(self.quality, expected, rel_tol=1e-6):
                raise ValueError(f"quality {self.quality:g} inconsistent with 2LF/lambda = {expected:g}")
        return self


class ShapeExcessModel(BaseModel):
    """Length-dependent excess loss from mirror shape deviation: A*exp((L-L0)/s)."""

    model_config = ConfigDict(frozen=True)

    amplitude_ppm: float = Field(default=0.0, ge=0)
    reference_length_um: float = Field(default=39.0, gt=0)
    scale_um: float = Field(default=5.0, gt=0)
    enabled: bool = True

    def loss_ppm(self, length_um: float) -> float:
        if not self.enabled or self.amplitude_ppm == 0:
            return 0.0
        return self.amplitude_ppm * math.exp((length_um - self.reference_length_um) / self.scale_um)


class SweepCalibration(BaseModel):
    """Mirror, coating and anchor values for a finesse-vs-length model."""

    model_config = ConfigDict(frozen=True)

    name: str
    topology: Topology
    wavelength_nm: float = Field(..., gt=0)
    roc_um: float = Field(..., gt=0)
    depth_um: float = Field(..., gt=0)
    transmission_ppm: float = Field(..., ge=0, description="Per mirror")
    excess_loss_ppm: float = Field(..., ge=0, description="Per mirror")
    additional_excess_ppm: float = Field(default=0.0, ge=0, description="Extra loss on the curved mirror")
    roughness_nm: float = Field(default=0.0, ge=0)
    anchor_short: Tuple[float, float] = Field(..., description="(length um, finesse)")
    anchor_long: Tuple[float, float] = Field(..., description="(length um, total loss ppm)")
    max_resonant_length_um: Optional[float] = Field(default=None, gt=0)


class FinessePoint(BaseModel):
    """One point of a finesse-vs-length curve."""

    model_config = ConfigDict(frozen=True)

    length_um: float
    finesse: float
    budget: LossBudget


class FinesseCurve(BaseModel):
    """A finesse-vs-length sweep with its truncation warnings."""

    model_config = ConfigDict(frozen=True)

    points: List[FinessePoint] = Field(default_factory=list)
    shape_model: ShapeExcessModel
    warnings: List[str] = Field(default_factory=list)

    @property
    def lengths_um(self) -> np.ndarray:
        return np.array([point.length_um for point in self.points])

    @property
    def finesse(self) -> np.ndarray:
        return np.array([point.finesse for point in self.points])

    @property
    def total_ppm(self) -> np.ndarray:
        return np.array([point.budget.total_ppm for point in self.points])


def _frozen_array(value) -> np.ndarray:
    array = np.array(value, dtype=float)
    array.setflags(write=False)
    return array


class Spectrum(BaseModel):
    """A 1D laser scan of reflected power, normalized to ~1 off resonance."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    axis_kind: AxisKind
    x: np.ndarray
    signal: np.ndarray
    noise_sigma: Optional[float] = Field(None, ge=0, description="Additive noise level of a synthetic scan")

    @field_validator("x", "signal", mode="before")
    @classmethod
    def _as_array(cls, value) -> np.ndarray:
        return _frozen_array(value)

    @model_validator(mode="after")
    def _check_points(self) -> "Spectrum":
        if self.x.ndim != 1 or self.x.shape != self.signal.shape:
            raise ValueError("x and signal must be 1D columns of equal length")
        if self.x.size < 16:
            raise ValueError(f"a spectrum needs at least 16 points, got {self.x.size}")
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.signal))):
            raise ValueError("spectrum contains non-finite values")
        steps = np.diff(self.x)
        if not (np.all(steps > 0) or np.all(steps < 0)):
            raise ValueError("x must be strictly monotonic")
        if np.any(self.signal < 0):
            raise ValueError("reflected power cannot be negative")
        if self.noise_sigma is not None and np.any(self.signal > 1.0 + 3.0 * self.noise_sigma):
            raise ValueError(f"signal exceeds 1 + 3*noise_sigma = {1.0 + 3.0 * self.noise_sigma:.6g}")
        return self

    @property
    def n_points(self) -> int:
        return int(self.x.size)

    @property
    def x_span(self) -> Tuple[float, float]:
        return float(self.x.min()), float(self.x.max())

    def in_frequency(self) -> "Spectrum":
        """Same scan on an absolute optical-frequency axis (GHz), ascending."""
        if self.axis_kind is not AxisKind.WAVELENGTH_NM:
            return self
        frequency_ghz = SPEED_OF_LIGHT / (self.x * 1e-9) * 1e-9
        order = np.argsort(frequency_ghz)
        return Spectrum(
            axis_kind=AxisKind.FREQUENCY_GHZ,
            x=frequency_ghz[order],
            signal=self.signal[order],
            noise_sigma=self.noise_sigma,
        )


class ResonancePeak(BaseModel):
    """One reflection dip."""

    model_config = ConfigDict(frozen=True)

    center: float
    fwhm: float = Field(..., gt=0, description="Axis units")
    contrast: float = Field(..., ge=0, le=1, description="Zero marks a degenerate seed")
    assignment: Optional[ModeIndex] = None


class CalibrationResult(BaseModel):
    """Frequency scale of a raw scan axis from the sideband splitting."""

    model_config = ConfigDict(frozen=True)

    scale_mhz_per_unit: float = Field(..., gt=0)
    sideband_spacing_measured: float = Field(..., gt=0, description="Raw units")
    spacing_left: float
    spacing_right: float
    residual: float = Field(..., ge=0, description="Relative left/right asymmetry")


class LorentzianFit(BaseModel):
    """Result of a reflection-dip fit."""

    model_config = ConfigDict(frozen=True)

    axis_kind: AxisKind
    center: float
    center_sigma: float
    fwhm: float = Field(..., gt=0, description="Axis units")
    fwhm_sigma: float
    fwhm_mhz: Optional[float] = None
    fwhm_sigma_mhz: Optional[float] = None
    contrast: float
    contrast_sigma: float
    sideband_ratio: Optional[float] = None
    sideband_spacing: Optional[float] = None
    residual_rms: float
    n_points: int
    n_evaluations: int

    def as_peak(self) -> ResonancePeak:
        return ResonancePeak(center=self.center, fwhm=self.fwhm, contrast=min(max(self.contrast, 1e-12), 1.0))


class LadderResult(BaseModel):
    """Mode assignment of a resonance ladder and the inferred cavity length."""

    model_config = ConfigDict(frozen=True)

    peaks: List[ResonancePeak] = Field(..., description="Peaks on the ladder, each with its assignment")
    unassigned: List[ResonancePeak] = Field(default_factory=list, description="Peaks off every rung")
    length_um: float
    root_count: int
    fsr_thz: float
    transverse_spacing_thz: float
    consistency_residual: float = Field(..., description="Worst peak offset / transverse spacing")
    fsr_length_um: Optional[float] = None
    length_agreement: Optional[float] = Field(None, description="fsr_length / length - 1")


class SurfaceMap(BaseModel):
    """Interferometer height samples (x, y, z) in micrometres."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    x_um: np.ndarray
    y_um: np.ndarray
    z_um: np.ndarray
    pitch_um: Optional[float] = Field(default=None, gt=0)

    @field_validator("x_um", "y_um", "z_um", mode="before")
    @classmethod
    def _as_array(cls, value) -> np.ndarray:
        return _frozen_array(value)

    @model_validator(mode="after")
    def _check_grid(self) -> "SurfaceMap":
        if not (self.x_um.shape == self.y_um.shape == self.z_um.shape) or self.x_um.ndim != 1:
            raise ValueError("x, y and z must be 1D columns of equal length")
        if self.x_um.size < 25:
            raise ValueError(f"a surface map needs at least 25 points, got {self.x_um.size}")
        if not np.all(np.isfinite(np.column_stack([self.x_um, self.y_um, self.z_um]))):
            raise ValueError("surface map contains non-finite values")
        pairs = np.unique(np.column_stack([self.x_um, self.y_um]), axis=0)
        if pairs.shape[0] != self.x_um.size:
            raise ValueError("surface map has duplicate (x, y) positions")
        return self

    @property
    def lateral_pitch_um(self) -> float:
        if self.pitch_um is not None:
            return self.pitch_um
        steps = np.diff(np.unique(self.x_um))
        return float(steps.min()) if steps.size else 1.0

    @property
    def n_points(self) -> int:
        return int(self.x_um.size)


class ProfileFit(BaseModel):
    """Paraboloid (+ quartic) fit of a mirror depression."""

    model_config = ConfigDict(frozen=True)

    roc_um: float = Field(..., gt=0)
    roc_sigma_um: float = Field(..., ge=0)
    center_um: Tuple[float, float]
    vertex_height_um: float
    tilt: Tuple[float, float]
    quartic_coeff: float = Field(..., description="um^-3; zero when the term is excluded")
    include_quartic: bool
    rms_residual_nm: float = Field(..., ge=0)
    fit_radius_um: float = Field(..., gt=0)
    n_points: int
    depth_um: float
    aperture_radius_um: Optional[float] = None


class ReferenceCavityRow(BaseModel):
    """A measured cavity assembly with its stated uncertainties."""

    model_config = ConfigDict(frozen=True)

    name: str
    topology: Topology
    wavelength_nm: float
    roc_um: float
    roc_sigma_um: float
    length_um: float
    length_sigma_um: float
    waist_um: float
    waist_sigma_um: float
    volume_lambda3: float
    volume_sigma_lambda3: float
    finesse: float
    finesse_sigma: float
    quality: float
    quality_sigma: float
    enhancement: float = Field(..., description="Printed value, see enhancement note")
