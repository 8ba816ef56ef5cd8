"""
Paraxial Gaussian-mode geometry of plano-concave and symmetric
concave-concave cavities.

All lengths are in micrometres and every mode quantity is evaluated at
the effective length (mirror penetration included).
"""
import logging
import math
from typing import List, NamedTuple, Optional, Tuple

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT
from scipy.optimize import brentq

from app.core.config import settings
from app.core.errors import DomainError, NoSolutionError
from app.models.models import CavityGeometry, GaussianMode, Topology, Wavelength

logger = logging.getLogger(__name__)


class Stability(NamedTuple):
    g_product: float
    is_stable: bool


class LengthSolution(NamedTuple):
    length_um: float
    root_count: int
    roots: Tuple[float, ...]


def g_factors(geom: CavityGeometry, length_um: Optional[float] = None) -> Tuple[float, float]:
    """g_i = 1 - L/R_i, exactly 1 for a flat mirror."""
    length = geom.effective_length_um if length_um is None else length_um
    return tuple(1.0 - length * mirror.g_factor_per_um for mirror in geom.mirrors)


def stability(geom: CavityGeometry) -> Stability:
    g1, g2 = g_factors(geom)
    product = g1 * g2
    return Stability(product, 0.0 <= product <= 1.0)


def _mode_argument(geom: CavityGeometry) -> float:
    """alpha*R*L - L^2, which must be positive for a confined mode."""
    length = geom.effective_length_um
    argument = geom.alpha * geom.roc_um * length - length ** 2
    if argument <= 0:
        g_product = stability(geom).g_product
        state = "marginal" if math.isclose(argument, 0.0, abs_tol=1e-12 * geom.roc_um ** 2) else "unstable"
        raise DomainError(
            f"{state} geometry: g1*g2 = {g_product:.6g} at L = {length:.6g} um, "
            f"R = {geom.roc_um:.6g} um requires alpha*R*L - L^2 > 0"
        )
    return argument


def beam_waist(geom: CavityGeometry, wavelength: Wavelength) -> float:
    """Waist radius w0 in um."""
    argument = _mode_argument(geom)
    return math.sqrt(wavelength.um / (math.pi * geom.alpha) * math.sqrt(argument))


def rayleigh_range(geom: CavityGeometry, wavelength: Wavelength) -> float:
    waist = beam_waist(geom, wavelength)
    return math.pi * waist ** 2 / wavelength.um


def spot_size_and_wavefront(geom: CavityGeometry, wavelength: Wavelength, z_um: float) -> Tuple[float, float]:
    """
    Beam radius and wavefront curvature at distance z from the waist.

    Returns:
        (w(z), R(z)) in um; R is math.inf on the planar wavefront at z = 0
    """
    waist = beam_waist(geom, wavelength)
    z_r = math.pi * waist ** 2 / wavelength.um
    width = waist * math.sqrt(1.0 + (z_um / z_r) ** 2)
    if z_um == 0:
        return width, math.inf
    return width, z_um * (1.0 + (z_r / z_um) ** 2)


def curved_mirror_positions(geom: CavityGeometry) -> List[float]:
    """Axial positions of the curved mirrors relative to the waist."""
    length = geom.effective_length_um
    if geom.topology is Topology.PC:
        return [length]
    return [-length / 2.0, length / 2.0]


def spot_on_curved_mirror(geom: CavityGeometry, wavelength: Wavelength) -> float:
    width, _ = spot_size_and_wavefront(geom, wavelength, curved_mirror_positions(geom)[-1])
    return width


def mode_volume(geom: CavityGeometry, wavelength: Wavelength) -> Tuple[float, float]:
    """(pi/4) w0^2 L, in um^3 and in units of lambda^3."""
    waist = beam_waist(geom, wavelength)
    volume = math.pi / 4.0 * waist ** 2 * geom.effective_length_um
    return volume, volume / wavelength.um ** 3


def effective_length(spacing_um: float, wavelength: Wavelength,
                     penetration_per_mirror_um: Optional[float] = None) -> float:
    """Mirror spacing plus the mode penetration into both mirrors (default 0.8 lambda each)."""
    if spacing_um <= 0:
        raise DomainError(f"mirror spacing must be positive, got {spacing_um}")
    if penetration_per_mirror_um is None:
        penetration_per_mirror_um = settings.penetration_lambda * wavelength.um
    if penetration_per_mirror_um < 0:
        raise DomainError("penetration depth cannot be negative")
    return spacing_um + 2.0 * penetration_per_mirror_um


def free_spectral_range(length_um: float, medium_index: float = 1.0) -> float:
    """c/2nL in THz."""
    if length_um <= 0:
        raise DomainError(f"cavity length must be positive, got {length_um}")
    return SPEED_OF_LIGHT / (2.0 * medium_index * length_um * 1e-6) * 1e-12


def _gouy_phase(length_um: float, roc_um: float, topology: Topology) -> float:
    g = 1.0 - length_um / roc_um
    if topology is Topology.PC:
        return math.acos(math.sqrt(g))
    return math.acos(g)


def _spacing_thz(length_um: float, roc_um: float, topology: Topology, order: int) -> float:
    return order * SPEED_OF_LIGHT / (2.0 * math.pi * length_um * 1e-6) * _gouy_phase(length_um, roc_um, topology) * 1e-12


def transverse_mode_spacing(geom: CavityGeometry, order: int = 1) -> float:
    """
    Frequency offset of the TEM modes with p+q = order above TEM00, in THz.

    PC uses the Gouy phase arccos(sqrt(1 - L/R)); a symmetric CC uses
    arccos(1 - L/R), which is the same spacing as a PC of half the length.
    """
    if order < 0:
        raise DomainError(f"mode order must be non-negative, got {order}")
    _mode_argument(geom)
    return _spacing_thz(geom.effective_length_um, geom.roc_um, geom.topology, order)


def length_from_splitting(
    roc_um: float,
    splitting_thz: float,
    order: int = 1,
    bracket: Optional[Tuple[float, float]] = None,
    topology: Topology = Topology.PC,
) -> LengthSolution:
    """
    Effective length whose transverse-mode splitting equals `splitting_thz`.

    The splitting is not monotonic in L over the whole stable range, so the
    bracket is scanned on a grid and every sign change is refined with
    Brent's method. The smallest root wins.
    """
    topology = Topology(topology)
    if roc_um <= 0:
        raise DomainError(f"roc must be positive, got {roc_um}")
    if order < 1:
        raise DomainError("length inversion needs a mode order p+q >= 1")
    if splitting_thz <= 0:
        raise DomainError("mode splitting must be non-zero")
    limit = topology.alpha * roc_um
    low, high = bracket if bracket is not None else (1e-3 * roc_um, 0.75 * limit)
    if not 0 < low < high < limit:
        raise DomainError(f"bracket ({low:g}, {high:g}) um must lie inside (0, {limit:g}) um")

    def residual(length_um: float) -> float:
        return _spacing_thz(length_um, roc_um, topology, order) - splitting_thz

    grid = np.linspace(low, high, settings.root_grid_points)
    values = np.array([residual(length) for length in grid])
    roots: List[float] = []
    for index in range(grid.size - 1):
        left, right = values[index], values[index + 1]
        if left == 0.0:
            roots.append(float(grid[index]))
        elif left * right < 0:
            roots.append(brentq(residual, grid[index], grid[index + 1],
                                xtol=1e-15, rtol=settings.root_rtol, maxiter=200))
    if values[-1] == 0.0:
        roots.append(float(grid[-1]))
    if not roots:
        raise NoSolutionError("mode splitting inversion", (low, high), (float(values[0]), float(values[-1])))
    if len(roots) > 1:
        logger.info("Mode splitting %.6g THz has %d roots in bracket; using the smallest", splitting_thz, len(roots))
    return LengthSolution(roots[0], len(roots), tuple(roots))


def length_from_mode_splitting(
    roc_um: float,
    lambda00_nm: float,
    lambdapq_nm: float,
    order: int = 1,
    bracket: Optional[Tuple[float, float]] = None,
    topology: Topology = Topology.PC,
) -> LengthSolution:
    """Effective length from the wavelengths of TEM00 and a mode of order p+q."""
    if lambda00_nm == lambdapq_nm:
        raise DomainError("TEM00 and the higher-order mode must have different wavelengths")
    splitting_hz = abs(SPEED_OF_LIGHT / (lambdapq_nm * 1e-9) - SPEED_OF_LIGHT / (lambda00_nm * 1e-9))
    return length_from_splitting(roc_um, splitting_hz * 1e-12, order, bracket, topology)


def gaussian_mode(geom: CavityGeometry, wavelength: Wavelength) -> GaussianMode:
    waist = beam_waist(geom, wavelength)
    volume_um3, volume_lambda3 = mode_volume(geom, wavelength)
    length = geom.effective_length_um
    return GaussianMode(
        wavelength_nm=wavelength.nm,
        effective_length_um=length,
        g_product=stability(geom).g_product,
        waist_um=waist,
        rayleigh_um=math.pi * waist ** 2 / wavelength.um,
        fsr_thz=free_spectral_range(length, geom.medium_index),
        transverse_spacing_thz=transverse_mode_spacing(geom, 1),
        mode_volume_um3=volume_um3,
        mode_volume_lambda3=volume_lambda3,
    )


def mode_envelope(geom: CavityGeometry, wavelength: Wavelength, n_points: int = 201) -> Tuple[np.ndarray, np.ndarray]:
    """w(z) between the mirrors, z measured from the waist."""
    length = geom.effective_length_um
    start = 0.0 if geom.topology is Topology.PC else -length / 2.0
    z = np.linspace(start, start + length, n_points)
    waist = beam_waist(geom, wavelength)
    z_r = math.pi * waist ** 2 / wavelength.um
    return z, waist * np.sqrt(1.0 + (z / z_r) ** 2)
