"""
Shared fixtures: settings isolation and synthetic measurement files.
"""
import pytest

from app.core.config import Settings, settings
from app.models.models import AxisKind, CavityGeometry, Topology, Wavelength
from app.services import profilometry, spectra
from app.storage import files


@pytest.fixture(autouse=True)
def restore_settings():
    """CLI runs rewrite the process-wide settings; put them back after every test."""
    snapshot = {name: getattr(settings, name) for name in Settings.model_fields}
    yield
    for name, value in snapshot.items():
        setattr(settings, name, value)


@pytest.fixture
def pc_f():
    wavelength = Wavelength(nm=1276)
    return CavityGeometry.from_effective_length(Topology.PC, 69.3, 8.7, wavelength), wavelength


@pytest.fixture
def pc_a():
    wavelength = Wavelength(nm=1282)
    return CavityGeometry.from_effective_length(Topology.PC, 105.6, 18.9, wavelength), wavelength


@pytest.fixture
def sideband_scan(pc_f):
    """Carrier at 58 MHz with sidebands at +-200 MHz, 0.8 MHz per sample, light noise."""
    geom, wavelength = pc_f
    return spectra.synthesize_scan(
        geom, wavelength, 58.0,
        frequency_span_mhz=(-400.0, 400.0),
        axis_kind=AxisKind.SAMPLE_INDEX,
        n_points=1001,
        sideband=(200.0, 0.3),
        noise_sigma=0.01,
        seed=7,
    )


@pytest.fixture
def sideband_csv(tmp_path, sideband_scan):
    return files.write_spectrum_csv(sideband_scan, tmp_path / "pcf_sidebands.csv")


@pytest.fixture
def plain_csv(tmp_path, pc_f):
    geom, wavelength = pc_f
    scan = spectra.synthesize_scan(geom, wavelength, 58.0, frequency_span_mhz=(-300.0, 300.0),
                                   axis_kind=AxisKind.SAMPLE_INDEX, n_points=601)
    return files.write_spectrum_csv(scan, tmp_path / "pcf_plain.csv")


@pytest.fixture
def ladder_scan(pc_a):
    """TEM00 at 1282 nm with the first two transverse orders inside 1265-1285 nm."""
    geom, wavelength = pc_a
    return spectra.synthesize_scan(geom, wavelength, 5000.0, wavelength_range_nm=(1265.0, 1285.0), n_points=20001)


@pytest.fixture
def actuated_surface():
    return profilometry.synthesize_surface(105.6, 8.5, quartic_coeff=-1e-6, noise_sigma_nm=1.0, seed=11)


@pytest.fixture
def surface_csv(tmp_path, actuated_surface):
    return files.write_surface_csv(actuated_surface, tmp_path / "pca_surface.csv")
