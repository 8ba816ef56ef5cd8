"""
Pydantic schemas for requests and reports.
Every numeric field carries its unit in the name.
"""
from typing import List, Optional, Tuple

from pydantic import BaseModel, Field, model_validator

from app.models.models import (
    AxisKind,
    CalibrationResult,
    LadderResult,
    LossBudget,
    ResonancePeak,
    Topology,
)


class DesignRequest(BaseModel):
    """Cavity geometry and coating parameters for a design report."""

    topology: Topology = Field(..., description="pc or cc")
    roc_um: float = Field(..., gt=0, description="Mirror radius of curvature")
    lambda_nm: float = Field(..., gt=0, description="Vacuum wavelength")
    length_um: Optional[float] = Field(None, gt=0, description="Effective length, penetration included")
    spacing_um: Optional[float] = Field(None, gt=0, description="Geometric mirror spacing")
    penetration_lambda: Optional[float] = Field(None, ge=0, description="Penetration per mirror in wavelengths")
    depth_um: float = Field(0.0, ge=0, description="Mirror depression depth, sets the aperture")
    transmission_ppm: Optional[float] = Field(None, ge=0, description="Per mirror")
    excess_loss_ppm: Optional[float] = Field(None, ge=0, description="Per mirror")
    roughness_nm: Optional[float] = Field(None, ge=0)
    absorption_ppm: Optional[float] = Field(None, ge=0)
    loss_ppm: Optional[float] = Field(None, gt=0, description="Total round-trip loss, replaces the itemized budget")
    branching_ratio: Optional[float] = Field(None, ge=0, le=1)
    medium_index: Optional[float] = Field(None, gt=0)

    @model_validator(mode="after")
    def _one_length(self) -> "DesignRequest":
        if (self.length_um is None) == (self.spacing_um is None):
            raise ValueError("give exactly one of length_um or spacing_um")
        return self


class DesignReport(BaseModel):
    """One row of mode geometry and figures of merit."""

    topology: Topology
    roc_um: float
    lambda_nm: float
    spacing_um: float
    length_um: float
    g_product: float
    stable: bool
    waist_um: float
    rayleigh_um: float
    volume_um3: float
    volume_lambda3: float
    fsr_thz: float
    transverse_spacing_thz: float
    loss: LossBudget
    total_loss_ppm: float
    finesse: float
    finesse_approx: float
    quality: float
    linewidth_mhz: float
    photon_lifetime_ns: float
    enhancement: float
    purcell: float
    branching_ratio: float

    def csv_row(self) -> dict:
        row = self.model_dump(mode="json", exclude={"loss"})
        row.update({f"loss_{key}": value for key, value in self.loss.model_dump(mode="json").items()})
        return row


class Table1RowReport(BaseModel):
    """Computed values of one reference cavity beside the measured ones."""

    name: str
    topology: Topology
    lambda_nm: float
    roc_um: float
    length_um: float
    waist_um: float
    waist_table_um: float
    waist_delta_um: float
    waist_within: bool = Field(..., description="Inside the stated uncertainty")
    volume_lambda3: float
    volume_table_lambda3: float
    volume_delta_lambda3: float
    volume_within: bool
    finesse_table: float
    quality_from_finesse: float
    quality_table: float
    quality_within: bool
    enhancement_eq: float = Field(..., description="Q/(V/lambda^3) from the measured Q and V")
    enhancement_table: float


class Table1Report(BaseModel):
    rows: List[Table1RowReport]
    geometry_within: bool = Field(..., description="Every waist and volume inside its uncertainty")
    note: str


class LinewidthReport(BaseModel):
    """Lorentzian fit of the carrier dip."""

    center: float
    center_sigma: float
    fwhm: float = Field(..., description="Axis units")
    fwhm_sigma: float
    fwhm_mhz: Optional[float] = None
    fwhm_sigma_mhz: Optional[float] = None
    contrast: float
    sideband_ratio: Optional[float] = None
    residual: float = Field(..., description="RMS fit residual")


class SpectrumReport(BaseModel):
    source: str
    axis_kind: AxisKind
    n_points: int
    peaks: List[ResonancePeak]
    calibration: Optional[CalibrationResult] = None
    fit: Optional[LinewidthReport] = None
    ladder: Optional[LadderResult] = None
    fsr_thz: Optional[float] = None
    fsr_source: Optional[str] = Field(None, description="'ladder' or 'given'")
    finesse: Optional[float] = None
    loss_ppm: Optional[float] = None
    quality: Optional[float] = None
    warnings: List[str] = Field(default_factory=list)

    def csv_row(self) -> dict:
        fit = self.fit
        ladder = self.ladder
        return {
            "source": self.source,
            "axis_kind": self.axis_kind.value,
            "n_peaks": len(self.peaks),
            "center": fit.center if fit else None,
            "fwhm": fit.fwhm if fit else None,
            "fwhm_mhz": fit.fwhm_mhz if fit else None,
            "fwhm_sigma_mhz": fit.fwhm_sigma_mhz if fit else None,
            "contrast": fit.contrast if fit else None,
            "residual": fit.residual if fit else None,
            "scale_mhz_per_unit": self.calibration.scale_mhz_per_unit if self.calibration else None,
            "length_um": ladder.length_um if ladder else None,
            "fsr_thz": self.fsr_thz,
            "finesse": self.finesse,
            "loss_ppm": self.loss_ppm,
            "quality": self.quality,
        }


class ProfileReport(BaseModel):
    source: str
    roc_um: float
    roc_sigma_um: float
    center_um: Tuple[float, float]
    vertex_height_um: float
    tilt: Tuple[float, float]
    quartic: float = Field(..., description="r^4 coefficient in um^-3")
    include_quartic: bool
    rms_residual_nm: float
    fit_radius_um: float
    n_points: int
    depth_um: float
    aperture_radius_um: Optional[float] = None

    def csv_row(self) -> dict:
        row = self.model_dump(exclude={"center_um", "tilt"})
        row.update(center_x_um=self.center_um[0], center_y_um=self.center_um[1],
                   tilt_x=self.tilt[0], tilt_y=self.tilt[1])
        return row


class SweepRequest(BaseModel):
    """Finesse-vs-length sweep of a calibration preset."""

    calibration: str = Field("PC-a", description="PC-a or PC-a2")
    length_min_um: float = Field(10.0, gt=0)
    length_max_um: float = Field(40.0, gt=0)
    n_points: int = Field(61, ge=2, le=10000)
    shape_loss: bool = Field(True, description="Include the length-dependent shape loss")
    shape_amplitude_ppm: Optional[float] = Field(None, ge=0)
    shape_reference_um: Optional[float] = Field(None, gt=0)
    shape_scale_um: Optional[float] = Field(None, gt=0)

    @model_validator(mode="after")
    def _ordered(self) -> "SweepRequest":
        if self.length_max_um <= self.length_min_um:
            raise ValueError("length_max_um must exceed length_min_um")
        return self


class SweepPointReport(BaseModel):
    length_um: float
    finesse: float
    total_loss_ppm: float
    scattering_ppm: float
    clipping_ppm: float
    shape_excess_ppm: float


class SweepReport(BaseModel):
    calibration: str
    shape_amplitude_ppm: float
    shape_reference_um: float
    shape_scale_um: float
    shape_loss: bool
    points: List[SweepPointReport]
    warnings: List[str] = Field(default_factory=list)


class ErrorResponse(BaseModel):
    """Error response schema."""

    detail: str = Field(..., description="Error message")
    error_code: Optional[str] = Field(None, description="Error class name")


class HealthResponse(BaseModel):
    """Health check response."""

    status: str = Field(..., description="Service status")
    app_name: str = Field(..., description="Application name")
    version: str = Field(default="1.0.0", description="API version")
