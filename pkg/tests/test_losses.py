import math

import numpy as np
import pytest

from app.core.constants import (
    COATING_EXCESS_MAX_PPM,
    COATING_FINESSE_RANGE,
    COATING_LOSS_RANGE_PPM,
    HEADLINE_ENHANCEMENT,
    SWEEP_CALIBRATIONS,
)
from app.core.errors import CalibrationError, DomainError
from app.models.models import CavityGeometry, LossBudget, ShapeExcessModel, Topology, Wavelength
from app.services import losses, optics


def test_coating_limited_finesse_bounds():
    low_loss, high_loss = COATING_LOSS_RANGE_PPM
    high, _ = losses.finesse_from_loss(low_loss)
    low, _ = losses.finesse_from_loss(high_loss)
    assert high == pytest.approx(6.28e5, rel=5e-3)
    assert low == pytest.approx(5.24e5, rel=5e-3)
    assert COATING_FINESSE_RANGE[0] <= low < high <= COATING_FINESSE_RANGE[1]


def test_exact_finesse_below_small_loss_limit():
    for loss_fraction in np.linspace(1e-6, 0.9, 200):
        exact, approx = losses.finesse_from_loss(loss_fraction * 1e6)
        assert exact < approx
        gap = (approx - exact) / approx
        assert gap < loss_fraction
    _, approx = losses.finesse_from_loss(100.0)
    exact, _ = losses.finesse_from_loss(100.0)
    assert (approx - exact) / approx == pytest.approx(50e-6, rel=1e-2)


def test_finesse_from_budget():
    budget = LossBudget(transmission_a_ppm=5, transmission_b_ppm=5, coating_excess_ppm=COATING_EXCESS_MAX_PPM)
    assert budget.total_ppm == pytest.approx(10.0 + COATING_EXCESS_MAX_PPM)
    assert losses.finesse_from_loss(budget) == losses.finesse_from_loss(11.0)


def test_lossless_cavity_rejected():
    with pytest.raises(DomainError, match="lossless"):
        losses.finesse_from_loss(0.0)


@pytest.mark.parametrize("loss_ppm", [0.1, 12.0, 18.0, 50.0, 1e3, 2e5])
def test_loss_from_finesse_inverts(loss_ppm):
    exact, _ = losses.finesse_from_loss(loss_ppm)
    assert losses.loss_from_finesse(exact) == pytest.approx(loss_ppm, rel=1e-9)


def test_loss_from_finesse_rejects_trivial_finesse():
    with pytest.raises(DomainError):
        losses.loss_from_finesse(1.0)


def test_quality_equals_finesse_at_half_wavelength():
    wavelength = Wavelength(nm=1280)
    assert losses.q_from_finesse(3.3e5, wavelength.um / 2, wavelength) == pytest.approx(3.3e5, rel=1e-12)


def test_quality_from_linewidth():
    wavelength = Wavelength(nm=1276)
    assert losses.q_from_linewidth(wavelength, 58.0) == pytest.approx(4.05e6, rel=1e-2)


def test_linewidth_and_lifetime():
    assert losses.linewidth_from_finesse(3.5e5, 8.7) == pytest.approx(optics.free_spectral_range(8.7) * 1e6 / 3.5e5)
    tau = losses.photon_lifetime(3.5e5, 8.7)
    fwhm_hz = losses.linewidth_from_finesse(3.5e5, 8.7) * 1e6
    assert tau == pytest.approx(1.0 / (2 * math.pi * fwhm_hz), rel=1e-12)


def test_scattering_quadratic_in_roughness():
    wavelength = Wavelength(nm=1280)
    single = losses.scattering_loss(0.1, wavelength)
    assert losses.scattering_loss(0.2, wavelength) == pytest.approx(4 * single, rel=1e-12)
    assert single == pytest.approx((4 * math.pi * 0.1 / 1280) ** 2 * 1e6)


def test_enhancement_figures():
    assert losses.enhancement(4.1e6, 30.8) == pytest.approx(HEADLINE_ENHANCEMENT, rel=1e-2)
    assert losses.enhancement(7.1e6, 148.2) == pytest.approx(4.8e4, rel=1e-2)
    assert losses.purcell(4 * math.pi ** 2 / 3, 1.0) == pytest.approx(1.0, abs=1e-12)
    assert losses.enhancement(1e6, 10.0, medium_index=2.0) == pytest.approx(1e5 / 8)


def test_purcell_rejects_branching_ratio():
    with pytest.raises(DomainError, match="branching ratio"):
        losses.purcell(1e5, 1.5)


def test_clipping_negligible_at_long_length():
    wavelength = Wavelength(nm=1280)
    geom = CavityGeometry.from_effective_length(Topology.PC, 105.6, 39.0, wavelength, depth_um=8.5)
    spot = optics.spot_on_curved_mirror(geom, wavelength)
    assert geom.mirror_a.aperture_um == pytest.approx(41.5, abs=0.1)
    assert losses.clipping_loss(spot, geom.mirror_a.aperture_um) < 1.0


def test_clipping_grows_as_aperture_shrinks():
    assert losses.clipping_loss(5.0, 5.0) == pytest.approx(math.exp(-2) * 1e6)
    assert losses.clipping_loss(5.0, 4.0) > losses.clipping_loss(5.0, 5.0)


def test_loss_budget_charges_each_mirror():
    wavelength = Wavelength(nm=1280)
    pc = CavityGeometry.from_effective_length(Topology.PC, 105.6, 18.9, wavelength, depth_um=0.2,
                                              transmission_ppm=5, excess_loss_ppm=0.5, roughness_nm=0.1)
    cc = CavityGeometry.from_effective_length(Topology.CC, 105.6, 37.8, wavelength, depth_um=0.2,
                                              transmission_ppm=5, excess_loss_ppm=0.5, roughness_nm=0.1)
    pc_budget = losses.loss_budget(pc, wavelength, absorption_ppm=0)
    cc_budget = losses.loss_budget(cc, wavelength, absorption_ppm=0)

    assert pc_budget.transmission_a_ppm + pc_budget.transmission_b_ppm == pytest.approx(10.0)
    assert pc_budget.coating_excess_ppm == pytest.approx(1.0)
    assert pc_budget.scattering_ppm == pytest.approx(2 * losses.scattering_loss(0.1, wavelength))
    # same spot on every curved mirror, CC has two of them
    assert cc_budget.clipping_ppm == pytest.approx(2 * pc_budget.clipping_ppm, rel=1e-9)
    assert pc_budget.clipping_ppm > 0


def test_loss_budget_reads_absorption_from_settings():
    from app.core.config import settings

    wavelength = Wavelength(nm=1280)
    geom = CavityGeometry.from_effective_length(Topology.PC, 105.6, 18.9, wavelength)
    settings.absorption_ppm = 3.0
    assert losses.loss_budget(geom, wavelength).absorption_ppm == 3.0


def test_enhancement_report_is_consistent():
    wavelength = Wavelength(nm=1276)
    report = losses.enhancement_report(3.5e5, 8.7, wavelength, 30.8, branching_ratio=0.5)
    assert report.quality == pytest.approx(2 * 8.7 * 3.5e5 / 1.276)
    assert report.purcell == pytest.approx(losses.purcell(report.enhancement, 0.5))


def test_shape_excess_calibration_meets_anchors():
    calibration = SWEEP_CALIBRATIONS["PC-a"]
    wavelength = Wavelength(nm=calibration.wavelength_nm)
    template = losses.template_geometry(calibration)
    model = losses.calibrate_shape_excess(template, wavelength, calibration.anchor_short, calibration.anchor_long)

    assert model.reference_length_um == 39.0
    assert model.scale_um == pytest.approx(4.83, rel=2e-2)
    assert model.loss_ppm(18.9) == pytest.approx(0.59, rel=5e-2)


def test_shape_excess_calibration_rejects_shrinking_loss():
    calibration = SWEEP_CALIBRATIONS["PC-a"]
    wavelength = Wavelength(nm=calibration.wavelength_nm)
    template = losses.template_geometry(calibration)
    with pytest.raises(CalibrationError):
        losses.calibrate_shape_excess(template, wavelength, (18.9, 4.9e5), (39.0, 12.0))


def test_sweep_reaches_quoted_values():
    curve = losses.sweep_calibration(SWEEP_CALIBRATIONS["PC-a"], [18.9, 39.0])
    short, long = curve.points
    assert short.finesse == pytest.approx(4.9e5, abs=0.5e5)
    assert long.budget.total_ppm == pytest.approx(50.0, rel=0.1)
    assert not curve.warnings


def test_sweep_non_increasing():
    curve = losses.sweep_calibration(SWEEP_CALIBRATIONS["PC-a"], np.linspace(10.0, 40.0, 61))
    assert len(curve.points) == 61
    assert np.all(np.diff(curve.finesse) <= 0)


def test_sweep_without_shape_loss_is_flat():
    curve = losses.sweep_calibration(SWEEP_CALIBRATIONS["PC-a"], np.linspace(15.0, 35.0, 21), shape_enabled=False)
    assert curve.finesse.max() / curve.finesse.min() - 1 < 1e-2


def test_second_calibration_has_lower_finesse():
    lengths = np.linspace(10.0, 40.0, 13)
    nominal = losses.sweep_calibration(SWEEP_CALIBRATIONS["PC-a"], lengths)
    lossy = losses.sweep_calibration(SWEEP_CALIBRATIONS["PC-a2"], lengths)
    assert np.all(lossy.finesse < nominal.finesse)


def test_sweep_truncates_beyond_resonant_range():
    curve = losses.sweep_calibration(SWEEP_CALIBRATIONS["PC-a"], np.linspace(10.0, 45.0, 36))
    assert curve.lengths_um.max() <= 40.0
    assert any("no resonance" in message for message in curve.warnings)


def test_sweep_truncates_unstable_lengths():
    calibration = SWEEP_CALIBRATIONS["PC-a"]
    wavelength = Wavelength(nm=calibration.wavelength_nm)
    template = losses.template_geometry(calibration)
    curve = losses.finesse_vs_length(template, wavelength, [50.0, 110.0], shape_model=ShapeExcessModel(enabled=False))
    assert curve.lengths_um.tolist() == [50.0]
    assert any("alpha*R" in message for message in curve.warnings)


def test_sweep_rejects_length_inside_mirrors():
    calibration = SWEEP_CALIBRATIONS["PC-a"]
    template = losses.template_geometry(calibration)
    with pytest.raises(DomainError):
        losses.finesse_vs_length(template, Wavelength(nm=1280), [1.0])
