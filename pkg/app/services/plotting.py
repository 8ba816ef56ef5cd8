"""
Static SVG figures. Figures are built on matplotlib.figure.Figure directly
so that worker threads never touch pyplot state.
"""
import logging
from pathlib import Path
from typing import Dict, Optional

import matplotlib
import numpy as np
from matplotlib.figure import Figure

from app.models.models import CavityGeometry, FinesseCurve, Spectrum, Topology, Wavelength
from app.services import optics

logger = logging.getLogger(__name__)

matplotlib.rcParams["svg.hashsalt"] = "microcavity"
matplotlib.rcParams["svg.fonttype"] = "path"


def save_svg(figure: Figure, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    figure.savefig(path, format="svg", metadata={"Date": None})
    logger.info("Wrote %s", path)
    return path


def mode_sketch(geom: CavityGeometry, wavelength: Wavelength) -> Figure:
    """1/e^2 envelope of TEM00 between the mirrors."""
    z, width = optics.mode_envelope(geom, wavelength)
    figure = Figure(figsize=(6, 3))
    axes = figure.add_subplot()
    axes.fill_between(z, -width, width, color="tab:red", alpha=0.3, linewidth=0)
    axes.plot(z, width, color="tab:red")
    axes.plot(z, -width, color="tab:red")
    for position in optics.curved_mirror_positions(geom):
        axes.axvline(position, color="black")
    if geom.topology is Topology.PC:
        axes.axvline(0.0, color="black", linestyle="--")
    axes.set_xlabel("z (um)")
    axes.set_ylabel("w(z) (um)")
    axes.set_title(f"{geom.topology.value.upper()}  R={geom.roc_um:g} um  L={geom.effective_length_um:.4g} um")
    figure.tight_layout()
    return figure


def sweep_figure(curves: Dict[str, FinesseCurve]) -> Figure:
    figure = Figure(figsize=(6, 4))
    axes = figure.add_subplot()
    for name, curve in curves.items():
        axes.plot(curve.lengths_um, curve.finesse * 1e-3, marker="o", markersize=3, label=name)
    axes.set_xlabel("effective length (um)")
    axes.set_ylabel("finesse (x1e3)")
    axes.legend()
    figure.tight_layout()
    return figure


def residual_map(x_um: np.ndarray, y_um: np.ndarray, residual_nm: np.ndarray) -> Figure:
    figure = Figure(figsize=(5, 4))
    axes = figure.add_subplot()
    scatter = axes.scatter(x_um, y_um, c=residual_nm, s=4, cmap="coolwarm")
    figure.colorbar(scatter, ax=axes, label="residual (nm)")
    axes.set_aspect("equal")
    axes.set_xlabel("x (um)")
    axes.set_ylabel("y (um)")
    figure.tight_layout()
    return figure


def spectrum_figure(spectrum: Spectrum, model: Optional[np.ndarray] = None) -> Figure:
    figure = Figure(figsize=(6, 3))
    axes = figure.add_subplot()
    axes.plot(spectrum.x, spectrum.signal, color="tab:blue", linewidth=0.8)
    if model is not None:
        axes.plot(spectrum.x, model, color="tab:red", linestyle="--")
    axes.set_xlabel(spectrum.axis_kind.value)
    axes.set_ylabel("reflected power (norm.)")
    figure.tight_layout()
    return figure
