"""Artifact writers: map and curve CSVs, run manifests, binary debug dumps."""

import sys
import time
from pathlib import Path

import numpy as np
import pandas as pd

from scripts import config
from scripts.analysis.metrics import DetectionThreshold, delta_snr_target_from_ber, to_db
from scripts.analysis.sweep import (
    BestPolarizationMap,
    CapturedCurve,
    ContrastMap,
    OutageCurve,
)
from scripts.config import SolverSettings
from scripts.errors import SchemaError
from scripts.logger import logger
from scripts.models.mom import SolveContext
from scripts.utils import (
    atomic_write_bytes,
    atomic_write_text,
    canonical_json,
    custom_sort,
    sha256_text,
)

FLOAT_FORMAT: str = "%.10g"
MANIFEST_NAME: str = "manifest.json"

# tag types in the order curves are reported
TAG_ORDER: list = ["IPR", "4PR", "NR-best", "NR-worst"]

# choices the model makes where the physics leaves a gap
ASSUMPTIONS: dict = {
    "scatterer_orientation": "uniform over the axis half-sphere",
    "scatterer_wire_radius": "same as the dipoles",
    "reflective_planes": "single ground plane by image theory; chamber walls as wire grids",
    "wire_radius_default": f"{config.WIRE_RADIUS_WAVELENGTHS} wavelengths",
}

DEBUG_MAGIC: bytes = b"AMBZ"
DEBUG_VERSION: int = 1
_DEBUG_HEADER = np.dtype([("magic", "S4"), ("version", "<u4"), ("n", "<u4")])


def write_frame(df: pd.DataFrame, path: Path) -> Path:
    """Write a DataFrame as CSV with a fixed float format, atomically."""
    text = df.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return atomic_write_text(Path(path), text)


def write_contrast_map(contrast: ContrastMap, out_dir: Path) -> list[Path]:
    return [
        write_frame(contrast.to_frame(k), Path(out_dir) / f"layer_{k}.csv")
        for k in range(len(contrast))
    ]


def write_best_map(best: BestPolarizationMap, out_dir: Path) -> Path:
    return write_frame(best.to_frame(), Path(out_dir) / "best.csv")


def outage_frame(curves: list[OutageCurve]) -> pd.DataFrame:
    """All curves in long format, ordered by tag type then SNR^Tx."""
    df = pd.concat(
        [curve.to_frame().assign(tag_type=curve.tag_type) for curve in curves],
        ignore_index=True,
    ).filter(["tag_type", "snr_tx_db", "outage"])

    return custom_sort(df, "tag_type", TAG_ORDER)


def write_outage(curves: list[OutageCurve], out_dir: Path) -> list[Path]:
    out_dir = Path(out_dir)
    paths = [write_frame(outage_frame(curves), out_dir / "outage.csv")]
    for curve in curves:
        paths.append(write_frame(curve.to_frame(), out_dir / f"outage_{curve.tag_type}.csv"))

    return paths


def write_captured(curves: list[CapturedCurve], out_dir: Path) -> Path:
    df = pd.concat(
        [curve.to_frame().assign(tag_type=curve.tag_type) for curve in curves],
        ignore_index=True,
    ).filter(["tag_type", "snr_tx_db", "snr_captured_db"])

    return write_frame(
        custom_sort(df, "tag_type", TAG_ORDER), Path(out_dir) / "snr_captured.csv"
    )


def build_manifest(
    command: str,
    scene_text: str | None,
    seed: int | None,
    settings: SolverSettings,
    threshold: DetectionThreshold,
    started: float,
    p_noise_w: float = config.P_NOISE_W,
    argv: list | None = None,
    **extra,
) -> dict:
    """Everything needed to rerun a command and compare its outputs.

    Args:
        command (str): Subcommand name.
        scene_text (str): Exact scene document used, hashed into the manifest.
        seed (int): Scene seed.
        settings (SolverSettings): Solver settings of the run.
        threshold (DetectionThreshold): Detection thresholds of the run.
        started (float): ``time.perf_counter()`` at the start of the run.
        p_noise_w (float): Receiver noise power.
        argv (list): Command line; defaults to ``sys.argv``.
        **extra: Command-specific entries.

    Returns:
        dict: the manifest payload.

    """
    return {
        "command": command,
        "argv": list(sys.argv if argv is None else argv),
        "scene_hash": None if scene_text is None else sha256_text(scene_text),
        "seed": seed,
        "solver": settings.as_dict(),
        "metrics": {
            "p_noise_w": p_noise_w,
            "delta_snr_target_db": threshold.delta_snr_target_db,
            "ber_target": threshold.ber_target,
            "delta_snr_target_from_ber_db": to_db(
                delta_snr_target_from_ber(threshold.ber_target)
            ),
        },
        "assumptions": ASSUMPTIONS,
        "tool_version": config.TOOL_VERSION,
        "schema_version": config.SCHEMA_VERSION,
        "duration_s": round(time.perf_counter() - started, 3),
        **extra,
    }


def write_manifest(out_dir: Path, manifest: dict) -> Path:
    path = atomic_write_text(Path(out_dir) / MANIFEST_NAME, canonical_json(manifest))
    logger.info(f"Manifest written to {path}")

    return path


def dump_debug(path: Path, ctx: SolveContext, currents: np.ndarray) -> Path:
    """Loaded impedance matrix and a current vector in the AMBZ binary layout.

    Little-endian header (magic, version u32, N u32), then the N x N matrix
    row-major and the N currents, all complex128.
    """
    matrix = np.ascontiguousarray(ctx.loaded_matrix, dtype="<c16")
    currents = np.ascontiguousarray(currents, dtype="<c16").ravel()
    n = matrix.shape[0]
    if matrix.shape != (n, n) or currents.shape != (n,):
        raise ValueError(f"Matrix {matrix.shape} and currents {currents.shape} do not match")

    header = np.array([(DEBUG_MAGIC, DEBUG_VERSION, n)], dtype=_DEBUG_HEADER)

    return atomic_write_bytes(
        Path(path), header.tobytes() + matrix.tobytes() + currents.tobytes()
    )


def load_debug(path: Path) -> tuple[np.ndarray, np.ndarray]:
    data = Path(path).read_bytes()
    if len(data) < _DEBUG_HEADER.itemsize:
        raise SchemaError(f"{path} is too short for an AMBZ header")

    header = np.frombuffer(data, dtype=_DEBUG_HEADER, count=1)[0]
    if header["magic"] != DEBUG_MAGIC:
        raise SchemaError(f"{path} is not an AMBZ dump")
    if int(header["version"]) != DEBUG_VERSION:
        raise SchemaError(f"Unsupported AMBZ version {int(header['version'])}")

    n = int(header["n"])
    body = np.frombuffer(data, dtype="<c16", offset=_DEBUG_HEADER.itemsize)
    if body.size != n * n + n:
        raise SchemaError(f"{path} holds {body.size} values, expected {n * n + n}")

    return body[: n * n].reshape(n, n).copy(), body[n * n :].copy()
