"""Module to render the map and curve images of a run.

Images use a fixed dB colour scale so that runs can be compared by eye; the
CSVs next to them hold the actual values.
"""

from pathlib import Path

import matplotlib as mpl

mpl.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from scripts import config  # noqa: E402
from scripts.analysis.sweep import (  # noqa: E402
    BestPolarizationMap,
    CapturedCurve,
    ContrastMap,
    OutageCurve,
)
from scripts.logger import logger  # noqa: E402
from scripts.utils import parse_range  # noqa: E402

FIGURE_SIZE: tuple = (6.0, 5.0)
DPI: int = 120
COLORMAP: str = "viridis"


def db_scale(text: str = config.MAP_DB_RANGE) -> tuple[float, float, list[float]]:
    """Colour limits and ticks from a ``lo:hi:step`` dB range."""
    ticks = parse_range(text)
    if len(ticks) < 2:
        raise ValueError(f"dB range {text!r} needs at least two ticks")

    return ticks[0], ticks[-1], ticks


def _extent(grid) -> list[float]:
    half = grid.step / 2
    return [grid.x_min - half, grid.x_max + half, grid.y_min - half, grid.y_max + half]


def _save(fig, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=DPI, bbox_inches="tight", metadata={"Software": None})
    plt.close(fig)
    logger.debug(f"Chart written to {path}")

    return path


def contrast_heatmap(
    values: np.ndarray, grid, title: str, path: Path, db_range: str = config.MAP_DB_RANGE
) -> Path:
    lo, hi, ticks = db_scale(db_range)

    fig, ax = plt.subplots(figsize=FIGURE_SIZE)
    image = ax.imshow(
        np.ma.masked_invalid(values),
        origin="lower",
        extent=_extent(grid),
        vmin=lo,
        vmax=hi,
        cmap=COLORMAP,
        interpolation="nearest",
    )
    colorbar = fig.colorbar(image, ax=ax, ticks=ticks)
    colorbar.set_label("ΔSNR (dB)")
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    ax.set_title(title)

    return _save(fig, path)


def layer_heatmap(
    contrast: ContrastMap, k: int, path: Path, db_range: str = config.MAP_DB_RANGE
) -> Path:
    orientation = contrast.orientations[k]
    title = f"{contrast.name} orientation {orientation.as_tuple()}"

    return contrast_heatmap(contrast.layers[k], contrast.grid, title, path, db_range)


def best_heatmap(
    best: BestPolarizationMap, path: Path, db_range: str = config.MAP_DB_RANGE
) -> Path:
    return contrast_heatmap(best.best_delta_snr, best.grid, "Best ΔSNR", path, db_range)


def velvet_carpet(best: BestPolarizationMap, path: Path) -> Path:
    """Best tag axis per cell drawn as a short headless thread."""
    frame = best.to_frame().loc[lambda d: d.orientation_index >= 0]

    fig, ax = plt.subplots(figsize=FIGURE_SIZE)
    ax.quiver(
        frame.x_m,
        frame.y_m,
        frame.u_x,
        frame.u_y,
        frame.orientation_index,
        pivot="middle",
        headwidth=0,
        headlength=0,
        headaxislength=0,
        cmap=COLORMAP,
    )
    ax.set_xlim(*_extent(best.grid)[:2])
    ax.set_ylim(*_extent(best.grid)[2:])
    ax.set_aspect("equal")
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    ax.set_title("Best tag orientation")

    return _save(fig, path)


def outage_chart(curves: list[OutageCurve], path: Path) -> Path:
    fig, ax = plt.subplots(figsize=FIGURE_SIZE)
    for curve in curves:
        ax.plot(curve.snr_tx_db, curve.outage, marker="o", label=curve.tag_type)
    ax.set_yscale("symlog", linthresh=1e-3)
    ax.set_ylim(0, 1)
    ax.set_xlabel("SNR$^{Tx}$ (dB)")
    ax.set_ylabel("Outage probability")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()

    return _save(fig, path)


def captured_chart(curves: list[CapturedCurve], path: Path) -> Path:
    fig, ax = plt.subplots(figsize=FIGURE_SIZE)
    for curve in curves:
        ax.plot(curve.snr_tx_db, curve.snr_captured_db, marker="o", label=curve.tag_type)
    ax.set_xlabel("SNR$^{Tx}$ (dB)")
    ax.set_ylabel("SNR$^{captured}$ (dB)")
    ax.grid(True, alpha=0.3)
    ax.legend()

    return _save(fig, path)
