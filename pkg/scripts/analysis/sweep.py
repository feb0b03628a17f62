"""Spatial sweeps: contrast maps, best-polarization maps and coverage curves.

Every sweep reduces to the reader powers (P_on, P_off) of the tag posed at a
list of positions with each orientation of a polarization set. Those are
computed once per distinct tag axis, in fixed-size chunks of positions, so
that results depend neither on the number of worker threads nor on the order
in which chunks finish.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
import pandas as pd

from scripts import config
from scripts.analysis.metrics import (
    DetectionThreshold,
    LinkBudget,
    ber_from_delta_snr,
    delta_power,
    delta_snr,
    from_db,
    outage_probability,
    snr_captured,
    to_db,
)
from scripts.config import SolverSettings
from scripts.errors import SceneError
from scripts.logger import logger
from scripts.models.mom import EnvironmentSolver
from scripts.models.scene import (
    OrientationAngles,
    PolarizationSet,
    Position3,
    Scene,
    distinct_axes,
    orientation_to_axis,
)
from scripts.utils import inclusive_range, parse_grid

# the tag axis reaching furthest towards the ground; masks use it for every set
MASK_ORIENTATION = OrientationAngles(0.0, 0.0)


@dataclass(frozen=True)
class GridSpec:
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    step: float
    z_fixed: float = 0.3

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError(f"Grid step must be positive, got {self.step}")
        if self.x_max < self.x_min or self.y_max < self.y_min:
            raise ValueError("Grid bounds are reversed")

    @property
    def xs(self) -> np.ndarray:
        return np.round(inclusive_range(self.x_min, self.x_max, self.step), 12)

    @property
    def ys(self) -> np.ndarray:
        return np.round(inclusive_range(self.y_min, self.y_max, self.step), 12)

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.ys), len(self.xs)

    def positions(self) -> list[Position3]:
        """Cell centres, row by row (y outer, x inner)."""
        return [Position3(float(x), float(y), self.z_fixed) for y in self.ys for x in self.xs]

    @classmethod
    def parse(cls, text: str, z_fixed: float = 0.3) -> "GridSpec":
        x0, x1, y0, y1, step = parse_grid(text)
        return cls(x0, x1, y0, y1, step, z_fixed)

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(eq=False)
class ContrastMap:
    """Per-orientation SNR contrast over a grid, NaN at masked cells.

    ``layers`` has shape (orientations, ny, nx) in dB; ``delta_power`` and
    ``p_off`` hold the solver powers (W, 1 V feed) behind them.
    """

    grid: GridSpec
    orientations: tuple
    layers: np.ndarray
    mask: np.ndarray
    delta_power: np.ndarray
    p_off: np.ndarray
    budget: LinkBudget
    name: str = ""

    def __len__(self) -> int:
        return len(self.orientations)

    def to_frame(self, k: int) -> pd.DataFrame:
        """Layer ``k`` in the long map format."""
        orientation = self.orientations[k]
        xx, yy = np.meshgrid(self.grid.xs, self.grid.ys)

        return pd.DataFrame(
            {
                "x_m": xx.ravel(),
                "y_m": yy.ravel(),
                "orientation_index": k,
                "phi_deg": orientation.phi_deg,
                "theta_deg": orientation.theta_deg,
                "delta_snr_db": self.layers[k].ravel(),
                "masked": self.mask.ravel(),
            }
        )


@dataclass(eq=False)
class BestPolarizationMap:
    grid: GridSpec
    orientations: tuple
    best_delta_snr: np.ndarray
    best_orientation_index: np.ndarray
    mask: np.ndarray

    def to_frame(self) -> pd.DataFrame:
        """Best value per cell plus the thread of the velvet carpet.

        ``u_x`` and ``u_y`` are the in-plane components of the best tag axis;
        masked cells carry index -1 and empty values.
        """
        xx, yy = np.meshgrid(self.grid.xs, self.grid.ys)
        index = self.best_orientation_index.ravel()
        table = np.array(
            [
                [o.phi_deg, o.theta_deg, *orientation_to_axis(o)[:2]]
                for o in self.orientations
            ]
        )
        rows = np.where(index[:, None] >= 0, table[np.maximum(index, 0)], np.nan)

        return pd.DataFrame(
            {
                "x_m": xx.ravel(),
                "y_m": yy.ravel(),
                "best_delta_snr_db": self.best_delta_snr.ravel(),
                "orientation_index": index,
                "phi_deg": rows[:, 0],
                "theta_deg": rows[:, 1],
                "u_x": rows[:, 2],
                "u_y": rows[:, 3],
                "ber": ber_map(self).ravel(),
            }
        )


@dataclass(frozen=True)
class OutageCurve:
    tag_type: str
    snr_tx_db: tuple
    outage: tuple

    def __post_init__(self):
        object.__setattr__(self, "snr_tx_db", tuple(float(s) for s in self.snr_tx_db))
        object.__setattr__(self, "outage", tuple(float(p) for p in self.outage))
        if len(self.snr_tx_db) != len(self.outage):
            raise ValueError("SNR^Tx and outage lists differ in length")
        if any(not 0 <= p <= 1 for p in self.outage):
            raise ValueError("Outage probabilities must lie in [0, 1]")
        if any(b < a for a, b in zip(self.snr_tx_db, self.snr_tx_db[1:])):
            raise ValueError("SNR^Tx values must be in increasing order")

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"snr_tx_db": self.snr_tx_db, "outage": self.outage})


@dataclass(frozen=True)
class CapturedCurve:
    tag_type: str
    snr_tx_db: tuple
    snr_captured_db: tuple

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {"snr_tx_db": self.snr_tx_db, "snr_captured_db": self.snr_captured_db}
        )


def pose_powers(
    solver: EnvironmentSolver,
    positions: list[Position3],
    orientations,
    threads: int = 1,
    cache: dict | None = None,
    chunk: int = config.SWEEP_CHUNK_POSES,
) -> tuple[np.ndarray, np.ndarray]:
    """Reader powers for every (orientation, position) pair.

    Orientations sharing an axis are solved once. ``cache`` maps canonical
    axes to earlier results for the same solver and positions and is filled
    in place, so that several polarization sets can share one sweep.

    Args:
        solver (EnvironmentSolver): Factorized environment.
        positions (list[Position3]): Tag centres, all valid poses.
        orientations: Tag orientations.
        threads (int): Worker threads.
        cache (dict): Optional axis-keyed result cache.
        chunk (int): Poses per batched solve.

    Returns:
        tuple[np.ndarray, np.ndarray]: P_on and P_off, each of shape
        (orientations, positions).

    """
    if threads < 1:
        raise ValueError(f"Thread count must be at least 1, got {threads}")

    cache = {} if cache is None else cache
    orientations = list(orientations)
    axes = list(distinct_axes(orientations))
    pending = [axis for axis in axes if axis not in cache]

    jobs = [
        (axis, first) for axis in pending for first in range(0, len(positions), chunk)
    ]

    def run(job):
        axis, first = job
        return solver.transfer_batch(positions[first : first + chunk], axis)

    with ThreadPoolExecutor(max_workers=threads) as pool:
        results = list(pool.map(run, jobs))

    per_axis = len(jobs) // len(pending) if pending else 0
    for k, axis in enumerate(pending):
        parts = results[k * per_axis : (k + 1) * per_axis]
        cache[axis] = (
            np.concatenate([p[0] for p in parts]) if parts else np.zeros(0),
            np.concatenate([p[1] for p in parts]) if parts else np.zeros(0),
        )
        logger.info(
            f"Tag axis {axis.as_tuple()} done ({k + 1}/{len(pending)}, "
            f"{len(positions)} positions)"
        )

    p_on = np.stack([cache[o.canonical()][0] for o in orientations])
    p_off = np.stack([cache[o.canonical()][1] for o in orientations])

    return p_on, p_off


def valid_positions(scene: Scene, positions: list[Position3]) -> np.ndarray:
    """Boolean mask of the positions where the tag may be posed."""
    return np.array(
        [scene.tag_pose_violation(p, MASK_ORIENTATION) is None for p in positions], dtype=bool
    )


def contrast_map(
    scene: Scene,
    grid: GridSpec,
    pols: PolarizationSet,
    budget: LinkBudget,
    settings: SolverSettings | None = None,
    threads: int = 1,
    solver: EnvironmentSolver | None = None,
) -> ContrastMap:
    """SNR contrast of every grid cell for each orientation of ``pols``.

    Args:
        scene (Scene): Scene; its tag template supplies length and radius.
        grid (GridSpec): Tag positions.
        pols (PolarizationSet): Tag orientations, one layer each.
        budget (LinkBudget): Calibration from solver watts to SNR.
        settings (SolverSettings): Solver settings when no solver is given.
        threads (int): Worker threads.
        solver (EnvironmentSolver): Reuse an existing factorization.

    Returns:
        ContrastMap: layers in dB, NaN where the pose is invalid.

    """
    solver = solver or EnvironmentSolver(scene, settings)
    positions = grid.positions()
    valid = valid_positions(scene, positions)
    if not valid.any():
        raise SceneError("Every grid cell violates the tag placement rules")

    logger.info(
        f"Contrast map {pols.name}: {len(pols)} orientations "
        f"({len(pols.distinct_axes())} axes) x {int(valid.sum())} cells "
        f"({int((~valid).sum())} masked)"
    )
    kept = [p for p, ok in zip(positions, valid) if ok]
    p_on, p_off = pose_powers(solver, kept, pols.orientations, threads)

    shape = (len(pols), *grid.shape)
    mask = ~valid.reshape(grid.shape)
    layers = np.full(shape, np.nan)
    dp = np.full(shape, np.nan)
    off = np.full(shape, np.nan)

    diff = delta_power(p_on, p_off)
    dp[:, ~mask] = diff
    off[:, ~mask] = p_off
    layers[:, ~mask] = to_db(delta_snr(diff, budget))

    return ContrastMap(
        grid=grid,
        orientations=pols.orientations,
        layers=layers,
        mask=mask,
        delta_power=dp,
        p_off=off,
        budget=budget,
        name=pols.name,
    )


def best_polarization(contrast: ContrastMap) -> BestPolarizationMap:
    """Cellwise best layer; ties go to the lowest orientation index."""
    if len(contrast) == 0:
        raise ValueError("Contrast map has no layers")

    filled = np.where(np.isnan(contrast.layers), -np.inf, contrast.layers)
    index = np.argmax(filled, axis=0)
    best = np.take_along_axis(contrast.layers, index[None], axis=0)[0]

    return BestPolarizationMap(
        grid=contrast.grid,
        orientations=contrast.orientations,
        best_delta_snr=np.where(contrast.mask, np.nan, best),
        best_orientation_index=np.where(contrast.mask, -1, index),
        mask=contrast.mask,
    )


def ber_map(best: BestPolarizationMap) -> np.ndarray:
    """Energy-detector BER of the best contrast, NaN at masked cells."""
    return ber_from_delta_snr(from_db(best.best_delta_snr))


def best_fixed_orientation(contrast: ContrastMap) -> tuple[int, OrientationAngles]:
    """Layer with the highest mean linear contrast over the unmasked cells."""
    linear = from_db(contrast.layers[:, ~contrast.mask])
    index = int(np.argmax(linear.mean(axis=1)))

    return index, contrast.orientations[index]


def default_grid(scene: Scene) -> GridSpec:
    """6λ x 6λ window of 40 x 40 cells at the tag height.

    The window is centred between source and reader, or on the reader when
    the two are further apart than the window.
    """
    lam = scene.wavelength
    width = config.MAP_WINDOW_WAVELENGTHS * lam
    source = scene.source.center.as_array()
    reader = scene.reader.center.as_array()

    center = reader if np.linalg.norm(reader - source) > width else (source + reader) / 2
    step = width / (config.MAP_CELLS - 1)

    return GridSpec(
        x_min=float(center[0] - width / 2),
        x_max=float(center[0] + width / 2),
        y_min=float(center[1] - width / 2),
        y_max=float(center[1] + width / 2),
        step=step,
        z_fixed=scene.tag_template.center.z,
    )


def coverage_positions(
    reader: Position3,
    wavelength: float,
    step: float = config.FINE_COVERAGE_STEP_M,
    radii: tuple = config.COVERAGE_RADII_WAVELENGTHS,
) -> list[Position3]:
    """Lattice points around the reader strictly inside the coverage annulus.

    Points sit at the reader's height on the lattice x_R + i step, y_R + j step.
    """
    if not step > 0:
        raise ValueError(f"Coverage step must be positive, got {step}")

    inner, outer = (r * wavelength for r in radii)
    n = int(np.ceil(outer / step))
    offsets = np.arange(-n, n + 1) * step
    dx, dy = np.meshgrid(offsets, offsets)
    distance = np.hypot(dx, dy)
    keep = (distance > inner) & (distance < outer)

    positions = [
        Position3(round(reader.x + x, 12), round(reader.y + y, 12), reader.z)
        for x, y in zip(dx[keep], dy[keep])
    ]
    if len(positions) < config.MIN_COVERAGE_POSITIONS:
        logger.warning(
            f"Coverage step {step} m leaves only {len(positions)} positions in the annulus"
        )

    return positions


@dataclass(eq=False)
class CoverageSweep:
    """Best-orientation powers of several tag types over one coverage area."""

    positions: list
    delta_power: dict
    p_off: dict
    reference_power: float


def coverage_sweep(
    scene: Scene,
    sets: list[PolarizationSet],
    step: float = config.COVERAGE_STEP_M,
    settings: SolverSettings | None = None,
    threads: int = 1,
    solver: EnvironmentSolver | None = None,
) -> CoverageSweep:
    """Solve the coverage annulus once for all ``sets``.

    Every set shares the positions and the per-axis results, so nested sets
    compare on identical solver outputs.
    """
    solver = solver or EnvironmentSolver(scene, settings)
    candidates = coverage_positions(scene.reader.center, scene.wavelength, step)
    positions = [p for p, ok in zip(candidates, valid_positions(scene, candidates)) if ok]
    if not positions:
        raise SceneError("No valid tag position in the coverage area")

    logger.info(
        f"Coverage sweep: {len(positions)} of {len(candidates)} positions usable, "
        f"{len(sets)} tag types"
    )

    cache: dict = {}
    best_dp, best_off = {}, {}
    for pols in sets:
        p_on, p_off = pose_powers(solver, positions, pols.orientations, threads, cache)
        diff = delta_power(p_on, p_off)
        index = np.argmax(diff, axis=0)
        columns = np.arange(len(positions))
        best_dp[pols.name] = diff[index, columns]
        best_off[pols.name] = p_off[index, columns]

    return CoverageSweep(
        positions=positions,
        delta_power=best_dp,
        p_off=best_off,
        reference_power=solver.reference_source_power(),
    )


def outage_curves(
    scene: Scene,
    sets: list[PolarizationSet],
    snr_tx_range,
    threshold: DetectionThreshold = DetectionThreshold(),
    step: float = config.COVERAGE_STEP_M,
    settings: SolverSettings | None = None,
    threads: int = 1,
    solver: EnvironmentSolver | None = None,
    sweep: CoverageSweep | None = None,
) -> list[OutageCurve]:
    """Outage probability against SNR^Tx for each tag type.

    The solver runs once with a 1 V feed; each SNR^Tx point rescales those
    powers, which is exact because the fields are linear in the feed.
    """
    snr_tx_range = list(snr_tx_range)
    if not snr_tx_range:
        raise ValueError("SNR^Tx range is empty")

    sweep = sweep or coverage_sweep(scene, sets, step, settings, threads, solver)
    base = LinkBudget.from_reference(0.0, sweep.reference_power)

    curves = []
    for pols in sets:
        outage = [
            outage_probability(
                to_db(delta_snr(sweep.delta_power[pols.name], base.rescaled(snr))), threshold
            )
            for snr in snr_tx_range
        ]
        curves.append(OutageCurve(pols.name, snr_tx_range, outage))

    return curves


def outage_curve(
    scene: Scene,
    pols: PolarizationSet,
    snr_tx_range,
    threshold: DetectionThreshold = DetectionThreshold(),
    step: float = config.COVERAGE_STEP_M,
    settings: SolverSettings | None = None,
    threads: int = 1,
    solver: EnvironmentSolver | None = None,
) -> OutageCurve:
    return outage_curves(
        scene, [pols], snr_tx_range, threshold, step, settings, threads, solver
    )[0]


def snr_captured_curves(
    scene: Scene,
    sets: list[PolarizationSet],
    snr_tx_range,
    step: float = config.COVERAGE_STEP_M,
    settings: SolverSettings | None = None,
    threads: int = 1,
    solver: EnvironmentSolver | None = None,
    sweep: CoverageSweep | None = None,
) -> list[CapturedCurve]:
    """Mean reader SNR with the tag transparent, per SNR^Tx.

    The OFF-state power at each position is taken with the tag in the
    orientation that maximizes its contrast there.
    """
    snr_tx_range = list(snr_tx_range)
    if not snr_tx_range:
        raise ValueError("SNR^Tx range is empty")

    sweep = sweep or coverage_sweep(scene, sets, step, settings, threads, solver)
    base = LinkBudget.from_reference(0.0, sweep.reference_power)

    return [
        CapturedCurve(
            pols.name,
            tuple(snr_tx_range),
            tuple(snr_captured(sweep.p_off[pols.name], base.rescaled(s)) for s in snr_tx_range),
        )
        for pols in sets
    ]


def snr_captured_curve(
    scene: Scene,
    pols: PolarizationSet,
    snr_tx_range,
    step: float = config.COVERAGE_STEP_M,
    settings: SolverSettings | None = None,
    threads: int = 1,
    solver: EnvironmentSolver | None = None,
) -> CapturedCurve:
    return snr_captured_curves(scene, [pols], snr_tx_range, step, settings, threads, solver)[0]


# (better, worse, allowed pointwise violation) in the nested-set ordering
DOMINANCE_PAIRS: tuple = (
    ("IPR", "4PR", 0.0),
    ("4PR", "NR-best", 0.0),
    ("NR-best", "NR-worst", config.NR_PAIR_VIOLATION_MASS),
)


def check_dominance(curves: list[OutageCurve]) -> pd.DataFrame:
    """Check the outage ordering of the tag types present in ``curves``.

    Returns:
        pd.DataFrame: one row per checked pair with the largest pointwise
        excess of the better type's outage over the worse one's.

    """
    by_type = {curve.tag_type: curve for curve in curves}

    rows = []
    for better, worse, tolerance in DOMINANCE_PAIRS:
        if better not in by_type or worse not in by_type:
            continue
        a = np.asarray(by_type[better].outage)
        b = np.asarray(by_type[worse].outage)
        if by_type[better].snr_tx_db != by_type[worse].snr_tx_db:
            raise ValueError(f"{better} and {worse} curves use different SNR^Tx samples")

        violation = float(np.max(a - b, initial=0.0))
        rows.append(
            {
                "better": better,
                "worse": worse,
                "max_violation": violation,
                "tolerance": tolerance,
                "ok": violation <= tolerance,
            }
        )

    flags = pd.DataFrame(rows, columns=["better", "worse", "max_violation", "tolerance", "ok"])
    for row in flags.loc[lambda d: ~d.ok.astype(bool)].itertuples():
        logger.warning(
            f"Outage ordering {row.better} <= {row.worse} violated by {row.max_violation:.4g}"
        )

    return flags
