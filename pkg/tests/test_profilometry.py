import numpy as np
import pytest
from pydantic import ValidationError

from app.core.constants import (
    ACTUATED_MIRROR_DEPTH_UM,
    ACTUATED_MIRROR_ROC_UM,
    SHORT_MIRROR_DEPTH_UM,
    SHORT_MIRROR_ROC_UM,
)
from app.core.errors import DomainError
from app.models.models import SurfaceMap
from app.services import profilometry

FIXTURES = [
    (SHORT_MIRROR_ROC_UM, SHORT_MIRROR_DEPTH_UM, -1e-5),
    (ACTUATED_MIRROR_ROC_UM, ACTUATED_MIRROR_DEPTH_UM, -1e-6),
]


def test_aperture_from_cap():
    assert profilometry.aperture_from_cap(105.6, 8.5) == pytest.approx(41.51, abs=0.01)
    assert profilometry.aperture_from_cap(69.3, 4.5) == pytest.approx(24.56, abs=0.01)
    with pytest.raises(DomainError):
        profilometry.aperture_from_cap(10.0, 12.0)


@pytest.mark.parametrize("roc, depth, quartic", FIXTURES)
def test_roc_recovered_with_quartic_and_noise(roc, depth, quartic):
    surface = profilometry.synthesize_surface(roc, depth, quartic_coeff=quartic, noise_sigma_nm=1.0, seed=5)
    fit = profilometry.fit_mirror_profile(surface)
    assert fit.roc_um == pytest.approx(roc, rel=1e-2)
    assert fit.quartic_coeff == pytest.approx(quartic, rel=0.3)
    assert fit.rms_residual_nm == pytest.approx(1.0, rel=0.2)
    assert fit.roc_sigma_um > 0


@pytest.mark.parametrize("roc, depth, quartic", FIXTURES)
def test_quartic_term_never_increases_residual(roc, depth, quartic):
    surface = profilometry.synthesize_surface(roc, depth, quartic_coeff=quartic, noise_sigma_nm=1.0, seed=6)
    with_quartic = profilometry.fit_mirror_profile(surface, include_quartic=True)
    without = profilometry.fit_mirror_profile(surface, include_quartic=False)
    assert with_quartic.n_points == without.n_points
    assert with_quartic.rms_residual_nm <= without.rms_residual_nm
    assert without.quartic_coeff == 0.0


def test_residual_tracks_noise_level():
    residuals = []
    for noise in (0.5, 1.0, 2.0):
        surface = profilometry.synthesize_surface(SHORT_MIRROR_ROC_UM, SHORT_MIRROR_DEPTH_UM,
                                                  noise_sigma_nm=noise, seed=9)
        residuals.append(profilometry.fit_mirror_profile(surface).rms_residual_nm)
    assert 1.7 <= residuals[1] / residuals[0] <= 2.3
    assert 1.7 <= residuals[2] / residuals[1] <= 2.3


@pytest.mark.parametrize("include_quartic", [True, False])
def test_noiseless_fit_invariant_under_shift_and_tilt(include_quartic):
    surface = profilometry.synthesize_surface(SHORT_MIRROR_ROC_UM, SHORT_MIRROR_DEPTH_UM,
                                              center_um=(3.2, -1.7), plane=(0.5, 0.01, -0.02))
    fit = profilometry.fit_mirror_profile(surface, fit_radius_um=8.0, include_quartic=include_quartic)
    assert fit.roc_um == pytest.approx(SHORT_MIRROR_ROC_UM, rel=1e-6)
    assert fit.rms_residual_nm < 1e-3


def test_noiseless_vertex_located():
    surface = profilometry.synthesize_surface(ACTUATED_MIRROR_ROC_UM, ACTUATED_MIRROR_DEPTH_UM, center_um=(2.0, 1.0))
    fit = profilometry.fit_mirror_profile(surface, fit_radius_um=12.0, include_quartic=False)
    assert fit.center_um == pytest.approx((2.0, 1.0), abs=1e-6)
    assert fit.vertex_height_um == pytest.approx(-ACTUATED_MIRROR_DEPTH_UM, abs=1e-9)
    assert fit.depth_um == pytest.approx(ACTUATED_MIRROR_DEPTH_UM, abs=0.01)
    assert fit.aperture_radius_um == pytest.approx(41.5, abs=0.1)


def test_default_fit_radius_follows_cap(actuated_surface):
    cap = profilometry.estimate_cap_radius(actuated_surface)
    assert cap == pytest.approx(41.5, abs=1.5)
    fit = profilometry.fit_mirror_profile(actuated_surface)
    assert fit.fit_radius_um == pytest.approx(0.4 * cap)


def test_fit_radius_beyond_map_rejected(actuated_surface):
    with pytest.raises(DomainError, match="exceeds the map extent"):
        profilometry.fit_mirror_profile(actuated_surface, fit_radius_um=500.0)


def test_profile_residuals_match_report(actuated_surface):
    fit = profilometry.fit_mirror_profile(actuated_surface)
    x, y, residual = profilometry.profile_residuals(actuated_surface, fit)
    assert x.size == y.size == residual.size
    assert np.sqrt(np.mean(residual ** 2)) == pytest.approx(fit.rms_residual_nm, rel=0.05)


def test_surface_map_rejects_duplicates():
    x = np.tile(np.arange(5.0), 6)
    y = np.repeat(np.arange(6.0), 5)
    x[-1] = x[-2]
    y[-1] = y[-2]
    with pytest.raises(ValidationError, match="duplicate"):
        SurfaceMap(x_um=x, y_um=y, z_um=np.zeros(30))


def test_roc_scatter_grows_linearly_with_noise():
    scatter = []
    for noise_nm in (0.5, 1.0, 2.0):
        rocs = [
            profilometry.fit_mirror_profile(
                profilometry.synthesize_surface(SHORT_MIRROR_ROC_UM, SHORT_MIRROR_DEPTH_UM,
                                                noise_sigma_nm=noise_nm, seed=seed),
                fit_radius_um=10.0, include_quartic=False,
            ).roc_um
            for seed in range(100)
        ]
        assert np.mean(rocs) == pytest.approx(SHORT_MIRROR_ROC_UM, rel=1e-2)
        scatter.append(np.std(rocs))
    assert scatter[1] / scatter[0] == pytest.approx(2.0, rel=0.25)
    assert scatter[2] / scatter[1] == pytest.approx(2.0, rel=0.25)
