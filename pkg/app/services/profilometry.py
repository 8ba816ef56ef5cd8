"""
Mirror surface maps: radius-of-curvature fits and spherical-cap geometry.
"""
import logging
import math
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import least_squares

from app.core.config import settings
from app.core.errors import DomainError, FitError
from app.models.models import ProfileFit, SurfaceMap

logger = logging.getLogger(__name__)

MAX_VERTEX_ITERATIONS = 10


def aperture_from_cap(roc_um: float, depth_um: float) -> float:
    """Rim radius sqrt(2*R*d - d^2) of a spherical cap of depth d."""
    if not 0 < depth_um < roc_um:
        raise DomainError(f"cap depth must lie in (0, R): depth {depth_um:g} um, R {roc_um:g} um")
    return math.sqrt(2.0 * roc_um * depth_um - depth_um ** 2)


def synthesize_surface(
    roc_um: float,
    depth_um: float,
    quartic_coeff: float = 0.0,
    noise_sigma_nm: float = 0.0,
    pitch_um: float = 0.5,
    seed: Optional[int] = None,
    center_um: Tuple[float, float] = (0.0, 0.0),
    plane: Tuple[float, float, float] = (0.0, 0.0, 0.0),
    extent_factor: float = 1.25,
) -> SurfaceMap:
    """
    Square-grid height map of a depression z = r^2/2R + c4*r^4 - d inside the cap, 0 outside.

    `plane` = (offset, x slope, y slope) is added everywhere.
    """
    aperture = aperture_from_cap(roc_um, depth_um)
    if pitch_um <= 0:
        raise DomainError("pitch must be positive")
    half = extent_factor * aperture + max(abs(center_um[0]), abs(center_um[1]))
    steps = int(math.ceil(half / pitch_um))
    axis = pitch_um * np.arange(-steps, steps + 1)
    x, y = np.meshgrid(axis, axis)
    r2 = (x - center_um[0]) ** 2 + (y - center_um[1]) ** 2
    bowl = np.minimum(r2 / (2.0 * roc_um) + quartic_coeff * r2 ** 2 - depth_um, 0.0)
    z = np.where(r2 <= aperture ** 2, bowl, 0.0) + plane[0] + plane[1] * x + plane[2] * y
    if noise_sigma_nm > 0:
        rng = np.random.default_rng(seed)
        z = z + rng.normal(0.0, noise_sigma_nm * 1e-3, z.shape)
    return SurfaceMap(x_um=x.ravel(), y_um=y.ravel(), z_um=z.ravel(), pitch_um=pitch_um)


def _rim_and_floor(surface: SurfaceMap) -> Tuple[float, float]:
    return float(np.percentile(surface.z_um, 90)), float(surface.z_um.min())


def estimate_cap_radius(surface: SurfaceMap) -> float:
    """Largest distance from the deepest point at which the map still lies 1 % of the depth below the rim."""
    rim, floor = _rim_and_floor(surface)
    deepest = int(np.argmin(surface.z_um))
    inside = surface.z_um < rim - 0.01 * (rim - floor)
    distance = np.hypot(surface.x_um - surface.x_um[deepest], surface.y_um - surface.y_um[deepest])
    return float(distance[inside].max()) if inside.any() else 0.0


def _solve(dx: np.ndarray, dy: np.ndarray, z: np.ndarray, scale: float, include_quartic: bool):
    """Linear least squares for (z0, a, b, kappa, c4) in coordinates scaled by the fit radius."""
    u, v = dx / scale, dy / scale
    s2 = u * u + v * v
    columns = [np.ones_like(u), u, v, s2]
    if include_quartic:
        columns.append(s2 * s2)
    design = np.column_stack(columns)
    if design.shape[0] <= design.shape[1]:
        raise FitError(f"{design.shape[0]} point(s) cannot determine {design.shape[1]} coefficients")
    coeffs, _, rank, _ = np.linalg.lstsq(design, z, rcond=None)
    if rank < design.shape[1]:
        raise FitError(f"rank-deficient design ({rank} of {design.shape[1]}): points are collinear")
    return coeffs, z - design @ coeffs, design


def _disc(surface: SurfaceMap, center: Tuple[float, float], radius: float) -> np.ndarray:
    return np.hypot(surface.x_um - center[0], surface.y_um - center[1]) <= radius


def _check_extent(surface: SurfaceMap, center: Tuple[float, float], radius: float) -> None:
    slack = 0.5 * surface.lateral_pitch_um
    if (center[0] - radius < surface.x_um.min() - slack or center[0] + radius > surface.x_um.max() + slack
            or center[1] - radius < surface.y_um.min() - slack or center[1] + radius > surface.y_um.max() + slack):
        raise DomainError(
            f"fit radius {radius:g} um around ({center[0]:.4g}, {center[1]:.4g}) exceeds the map extent"
        )


def _paraboloid_vertex(surface: SurfaceMap, radius: float) -> Tuple[Tuple[float, float], np.ndarray]:
    """Vertex of z = A + B*x + C*y + D*r^2 and the disc it selects, iterated until the disc is stable."""
    deepest = int(np.argmin(surface.z_um))
    center = (float(surface.x_um[deepest]), float(surface.y_um[deepest]))
    _check_extent(surface, center, radius)
    selected = _disc(surface, center, radius)
    for _ in range(MAX_VERTEX_ITERATIONS):
        coeffs, _, _ = _solve(surface.x_um[selected] - center[0], surface.y_um[selected] - center[1],
                              surface.z_um[selected], radius, include_quartic=False)
        if coeffs[3] <= 0:
            raise FitError("surface has no concave depression inside the fit radius")
        center = (center[0] - radius * coeffs[1] / (2.0 * coeffs[3]),
                  center[1] - radius * coeffs[2] / (2.0 * coeffs[3]))
        _check_extent(surface, center, radius)
        updated = _disc(surface, center, radius)
        if np.array_equal(updated, selected):
            break
        selected = updated
    return center, selected


def fit_mirror_profile(
    surface: SurfaceMap,
    fit_radius_um: Optional[float] = None,
    include_quartic: bool = True,
) -> ProfileFit:
    """
    Fit z = z0 + a(x-x0) + b(y-y0) + r^2/2R + c4*r^4 on a disc around the depression.

    The disc is centred on the vertex of a tilt-free paraboloid. With the
    quartic term the center (x0, y0) is refined by nonlinear least squares,
    each step solving the linear coefficients exactly; without it the model
    is linear and the vertex is used as is.

    Args:
        surface: Height map
        fit_radius_um: Disc radius; defaults to profile_fit_fraction of the cap radius
        include_quartic: Whether to fit the r^4 correction

    Returns:
        ProfileFit with a single-fit ROC uncertainty
    """
    if fit_radius_um is None:
        fit_radius_um = settings.profile_fit_fraction * estimate_cap_radius(surface)
    if fit_radius_um <= 0:
        raise DomainError("fit radius must be positive")
    radius = float(fit_radius_um)
    vertex, selected = _paraboloid_vertex(surface, radius)
    x, y, z = surface.x_um[selected], surface.y_um[selected], surface.z_um[selected]

    center = vertex
    if include_quartic:
        pitch = surface.lateral_pitch_um

        def residuals(shift: np.ndarray) -> np.ndarray:
            return _solve(x - vertex[0] - shift[0] * pitch, y - vertex[1] - shift[1] * pitch,
                          z, radius, include_quartic=True)[1]

        refined = least_squares(residuals, np.zeros(2), method="trf",
                                xtol=settings.profile_xtol, ftol=1e-15, gtol=1e-15)
        center = (vertex[0] + refined.x[0] * pitch, vertex[1] + refined.x[1] * pitch)
        logger.debug("Center refined by (%.3g, %.3g) um in %d evaluations",
                     refined.x[0] * pitch, refined.x[1] * pitch, refined.nfev)

    coeffs, residual, design = _solve(x - center[0], y - center[1], z, radius, include_quartic)
    kappa = coeffs[3] / radius ** 2
    if kappa <= 0:
        raise FitError("fitted curvature is not concave", float(np.sqrt(np.mean(residual ** 2))))
    dof = design.shape[0] - design.shape[1]
    variance = float(residual @ residual) / dof
    covariance = variance * np.linalg.inv(design.T @ design)
    kappa_sigma = math.sqrt(max(covariance[3, 3], 0.0)) / radius ** 2
    roc = 1.0 / (2.0 * kappa)

    rim, floor = _rim_and_floor(surface)
    depth = rim - floor
    aperture = aperture_from_cap(roc, depth) if 0 < depth < roc else None
    return ProfileFit(
        roc_um=roc,
        roc_sigma_um=kappa_sigma / (2.0 * kappa ** 2),
        center_um=center,
        vertex_height_um=float(coeffs[0]),
        tilt=(float(coeffs[1] / radius), float(coeffs[2] / radius)),
        quartic_coeff=float(coeffs[4] / radius ** 4) if include_quartic else 0.0,
        include_quartic=include_quartic,
        rms_residual_nm=float(np.sqrt(np.mean(residual ** 2))) * 1e3,
        fit_radius_um=radius,
        n_points=int(selected.sum()),
        depth_um=depth,
        aperture_radius_um=aperture,
    )


def profile_residuals(surface: SurfaceMap, fit: ProfileFit) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(x, y, residual in nm) of every map point inside the fit disc."""
    selected = _disc(surface, fit.center_um, fit.fit_radius_um)
    dx = surface.x_um[selected] - fit.center_um[0]
    dy = surface.y_um[selected] - fit.center_um[1]
    r2 = dx * dx + dy * dy
    model = (fit.vertex_height_um + fit.tilt[0] * dx + fit.tilt[1] * dy
             + r2 / (2.0 * fit.roc_um) + fit.quartic_coeff * r2 * r2)
    return surface.x_um[selected], surface.y_um[selected], (surface.z_um[selected] - model) * 1e3
