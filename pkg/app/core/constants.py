"""
Measured reference values for the O-band microcavity assemblies.

Every value carries the measurement it comes from. Cavity rows use the
effective length (mirror penetration of 0.8 wavelengths included).
"""
from typing import Dict, Optional

from app.models.models import ReferenceCavityRow, SweepCalibration

# Coating: specified transmission at 1280 nm and excess loss bound, per mirror
COATING_TRANSMISSION_PPM = 5.0
COATING_EXCESS_MAX_PPM = 1.0
# Total coating loss range and the finesse bound it implies
COATING_LOSS_RANGE_PPM = (10.0, 12.0)
COATING_FINESSE_RANGE = (5.2e5, 6.3e5)

# Mode penetration into each Bragg mirror, in wavelengths
PENETRATION_LAMBDA = 0.8

# Mirror families: interferometer ROC and etch depth
SHORT_MIRROR_ROC_UM = 69.3
SHORT_MIRROR_DEPTH_UM = 4.5
ACTUATED_MIRROR_ROC_UM = 105.6
ACTUATED_MIRROR_DEPTH_UM = 8.5

# Mode ladder of the shortest cavity: TEM00 and a p+q=1 mode
LADDER_FUNDAMENTAL_NM = 1275.7
LADDER_FIRST_ORDER_NM = 1263.5
LADDER_LENGTH_UM = 6.7
LADDER_LENGTH_SIGMA_UM = 0.5
# FSR quoted alongside that length (c/2L at 6.7 um is 22.4 THz; kept as measured)
QUOTED_FSR_THZ = 20.3

# Linewidth scan at 1276 nm with sideband modulation
SIDEBAND_MODULATION_MHZ = 200.0
MEASURED_LINEWIDTH_MHZ = 58.0
MEASURED_LINEWIDTH_SIGMA_MHZ = 2.0
SHORT_CAVITY_FINESSE = 3.5e5
SHORT_CAVITY_LOSS_PPM = 18.0

# Length dependence of the actuated PC cavity
ACTUATED_FINESSE = 4.9e5
ACTUATED_FINESSE_LENGTH_UM = 18.9
LONG_CAVITY_LOSS_PPM = 50.0
LONG_CAVITY_LENGTH_UM = 39.0
MAX_RESONANT_LENGTH_UM = 40.0

# Headline enhancement Q/(V/lambda^3)
HEADLINE_ENHANCEMENT = 1.33e5

TABLE1_ROWS: Dict[str, ReferenceCavityRow] = {
    "PC-f": ReferenceCavityRow(
        name="PC-f", topology="pc", wavelength_nm=1276, roc_um=69.3, roc_sigma_um=8.3,
        length_um=8.7, length_sigma_um=0.7, waist_um=3.05, waist_sigma_um=0.16,
        volume_lambda3=30.8, volume_sigma_lambda3=5, finesse=350e3, finesse_sigma=30e3,
        quality=4.1e6, quality_sigma=0.6e6, enhancement=1.8e5,
    ),
    "PC-f2": ReferenceCavityRow(
        name="PC-f2", topology="pc", wavelength_nm=1279, roc_um=69.3, roc_sigma_um=8.3,
        length_um=9.3, length_sigma_um=0.8, waist_um=3.10, waist_sigma_um=0.16,
        volume_lambda3=33.7, volume_sigma_lambda3=5, finesse=330e3, finesse_sigma=20e3,
        quality=4.1e6, quality_sigma=0.5e6, enhancement=1.6e5,
    ),
    "PC-a": ReferenceCavityRow(
        name="PC-a", topology="pc", wavelength_nm=1280, roc_um=105.6, roc_sigma_um=17.1,
        length_um=18.9, length_sigma_um=0.1, waist_um=4.05, waist_sigma_um=0.18,
        volume_lambda3=116.7, volume_sigma_lambda3=10, finesse=490e3, finesse_sigma=90e3,
        quality=12.9e6, quality_sigma=2.4e6, enhancement=1.3e5,
    ),
    "CC-a": ReferenceCavityRow(
        name="CC-a", topology="cc", wavelength_nm=1280, roc_um=105.6, roc_sigma_um=17.1,
        length_um=27.4, length_sigma_um=0.1, waist_um=3.79, waist_sigma_um=0.17,
        volume_lambda3=148.2, volume_sigma_lambda3=14, finesse=180e3, finesse_sigma=10e3,
        quality=7.1e6, quality_sigma=0.4e6, enhancement=0.5e5,
    ),
}

# PC-a2 is the same mirror family with additional excess loss on the curved mirror
SWEEP_CALIBRATIONS: Dict[str, SweepCalibration] = {
    "PC-a": SweepCalibration(
        name="PC-a",
        topology="pc",
        wavelength_nm=1280,
        roc_um=ACTUATED_MIRROR_ROC_UM,
        depth_um=ACTUATED_MIRROR_DEPTH_UM,
        transmission_ppm=COATING_TRANSMISSION_PPM,
        excess_loss_ppm=0.5,
        additional_excess_ppm=0.0,
        roughness_nm=0.08,
        anchor_short=(ACTUATED_FINESSE_LENGTH_UM, ACTUATED_FINESSE),
        anchor_long=(LONG_CAVITY_LENGTH_UM, LONG_CAVITY_LOSS_PPM),
        max_resonant_length_um=MAX_RESONANT_LENGTH_UM,
    ),
    "PC-a2": SweepCalibration(
        name="PC-a2",
        topology="pc",
        wavelength_nm=1280,
        roc_um=ACTUATED_MIRROR_ROC_UM,
        depth_um=ACTUATED_MIRROR_DEPTH_UM,
        transmission_ppm=COATING_TRANSMISSION_PPM,
        excess_loss_ppm=0.5,
        additional_excess_ppm=5.0,
        roughness_nm=0.08,
        anchor_short=(ACTUATED_FINESSE_LENGTH_UM, ACTUATED_FINESSE),
        anchor_long=(LONG_CAVITY_LENGTH_UM, LONG_CAVITY_LOSS_PPM),
        max_resonant_length_um=MAX_RESONANT_LENGTH_UM,
    ),
}


def get_table1_row(name: str) -> Optional[ReferenceCavityRow]:
    """
    Get a reference cavity row by name (case-insensitive).

    Args:
        name: Row label such as "PC-f" or "cc-a"

    Returns:
        ReferenceCavityRow or None if not found
    """
    wanted = name.strip().lower()
    for key, row in TABLE1_ROWS.items():
        if key.lower() == wanted:
            return row
    return None


def get_sweep_calibration(name: str) -> Optional[SweepCalibration]:
    """Get a finesse-vs-length calibration preset by name (case-insensitive)."""
    wanted = name.strip().lower()
    for key, calibration in SWEEP_CALIBRATIONS.items():
        if key.lower() == wanted:
            return calibration
    return None


def list_table1_rows() -> Dict[str, ReferenceCavityRow]:
    """All reference rows in table order."""
    return dict(TABLE1_ROWS)
