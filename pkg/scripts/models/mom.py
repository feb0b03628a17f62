"""Thin-wire Method of Moments solver.

Every straight wire of length L carrying N pulses is split into N + 1 equal
intervals of length L / (N + 1); the unknown currents sit on the N interior
nodes and vanish at the free ends. Current cells are centred on the nodes,
charge cells span the intervals, and the electric field is matched at the
node points. The resulting impedance matrix is

    Z = jw mu (dl_m . dl_n) psi_J + 1 / (jw eps) * (B psi_Q B^T)

with B the node-to-interval incidence. A perfectly conducting ground plane
is folded in by image theory: the image current of segment n flows on the
mirrored segment with opposite sign.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field, replace
from math import ceil

import numpy as np
import scipy.linalg
from scipy.linalg import lapack

from scripts import config
from scripts.config import SolverSettings
from scripts.errors import GeometryError, MeshError, NumericalError
from scripts.logger import logger
from scripts.models.kernel import Cells, potential_matrix, segment_distances
from scripts.models.scene import (
    GroundPlaneSpec,
    OrientationAngles,
    Position3,
    Scene,
    TagState,
    orientation_to_axis,
)


@dataclass(frozen=True, eq=False)
class Wire:
    """A straight wire carrying ``pulses`` unknown currents."""

    label: str
    start: np.ndarray
    end: np.ndarray
    radius: float
    pulses: int
    image: bool = False

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.end - self.start))

    @property
    def direction(self) -> np.ndarray:
        return (self.end - self.start) / self.length

    @property
    def delta(self) -> float:
        return self.length / (self.pulses + 1)

    @property
    def center_pulse(self) -> int:
        return self.pulses // 2

    def nodes(self) -> np.ndarray:
        steps = self.delta * np.arange(1, self.pulses + 1)
        return self.start + np.outer(steps, self.direction)

    def current_cells(self) -> Cells:
        return Cells(
            start=self.nodes() - self.direction * (self.delta / 2),
            direction=np.tile(self.direction, (self.pulses, 1)),
            length=np.full(self.pulses, self.delta),
            radius=np.full(self.pulses, self.radius),
        )

    def charge_cells(self) -> Cells:
        steps = self.delta * np.arange(self.pulses + 1)
        return Cells(
            start=self.start + np.outer(steps, self.direction),
            direction=np.tile(self.direction, (self.pulses + 1, 1)),
            length=np.full(self.pulses + 1, self.delta),
            radius=np.full(self.pulses + 1, self.radius),
        )

    def mirrored(self, height_z: float) -> "Wire":
        flip = np.array([1.0, 1.0, -1.0])
        shift = np.array([0.0, 0.0, 2 * height_z])
        return replace(
            self,
            label=f"{self.label}'",
            start=self.start * flip + shift,
            end=self.end * flip + shift,
            image=not self.image,
        )


@dataclass(frozen=True, eq=False)
class WireSet:
    """Cells and incidence bookkeeping of an ordered list of wires."""

    wires: tuple
    current: Cells
    charge: Cells
    plus: np.ndarray
    minus: np.ndarray

    @classmethod
    def build(cls, wires) -> "WireSet":
        wires = tuple(wires)
        plus, minus = [], []
        charge_offset = 0
        for wire in wires:
            pulse = np.arange(wire.pulses)
            plus.append(charge_offset + pulse + 1)
            minus.append(charge_offset + pulse)
            charge_offset += wire.pulses + 1

        return cls(
            wires=wires,
            current=Cells.concat([w.current_cells() for w in wires]),
            charge=Cells.concat([w.charge_cells() for w in wires]),
            plus=np.concatenate(plus),
            minus=np.concatenate(minus),
        )

    def __len__(self) -> int:
        return len(self.current)

    def mirrored(self, height_z: float) -> "WireSet":
        return WireSet.build(w.mirrored(height_z) for w in self.wires)


@dataclass(frozen=True)
class WireSegment:
    start: Position3
    end: Position3
    radius: float
    parent: str
    image: bool = False

    @property
    def length(self) -> float:
        return self.start.distance_to(self.end)


@dataclass(frozen=True, eq=False)
class MeshedScene:
    """Segmented scene; unknowns are numbered wire by wire, the tag last."""

    wires: tuple
    frequency_hz: float
    ground: GroundPlaneSpec
    source_port: int
    reader_port: int
    tag_port: int | None
    load_table: dict
    offsets: tuple

    @property
    def wavelength(self) -> float:
        return config.SPEED_OF_LIGHT / self.frequency_hz

    @property
    def n_real(self) -> int:
        return sum(w.pulses for w in self.wires)

    @property
    def n_segments(self) -> int:
        return self.n_real * (2 if self.ground.present else 1)

    @property
    def image_flag(self) -> np.ndarray:
        return np.arange(self.n_segments) >= self.n_real

    @property
    def segments(self) -> list[WireSegment]:
        """Real segments followed by their images when a ground plane exists."""
        wires = list(self.wires)
        if self.ground.present:
            wires += [w.mirrored(self.ground.height_z) for w in self.wires]

        out = []
        for wire in wires:
            cells = wire.current_cells()
            ends = cells.start + cells.direction * cells.length[:, None]
            for start, end in zip(cells.start, ends):
                out.append(
                    WireSegment(
                        Position3.from_array(start),
                        Position3.from_array(end),
                        wire.radius,
                        wire.label,
                        wire.image,
                    )
                )
        return out

    def image_index(self, segment: int) -> int:
        if not self.ground.present:
            raise MeshError("Scene has no ground plane, hence no image segments")
        return segment + self.n_real

    def wire_set(self) -> WireSet:
        return WireSet.build(self.wires)

    def ports(self) -> dict:
        ports = {"source": self.source_port, "reader": self.reader_port}
        if self.tag_port is not None:
            ports["tag"] = self.tag_port
        return ports


@dataclass(frozen=True)
class PortReading:
    current: complex
    voltage: complex
    power_w: float


@dataclass(frozen=True, eq=False)
class SolveContext:
    """Impedance matrix of a meshed scene plus the loads inserted into it.

    The LU factorization of the loaded matrix is computed once, on first use,
    and shared read-only afterwards.
    """

    mesh: MeshedScene
    impedance_matrix: np.ndarray
    frequency_hz: float
    folded: bool = True
    loads: dict = field(default_factory=dict)
    condition_limit: float = config.CONDITION_LIMIT
    _cache: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @property
    def size(self) -> int:
        return self.impedance_matrix.shape[0]

    @property
    def loaded_matrix(self) -> np.ndarray:
        matrix = self.impedance_matrix.copy()
        for k, z in self.loads.items():
            matrix[k, k] += z
        return matrix

    def asymmetry(self) -> float:
        """Largest |Z_mn - Z_nm| / |Z_mn| over the unloaded matrix."""
        z = self.impedance_matrix
        scale = np.maximum(np.abs(z), np.finfo(float).tiny)
        return float(np.max(np.abs(z - z.T) / scale))

    def factorization(self) -> tuple:
        with self._lock:
            if "lu" not in self._cache:
                self._cache["lu"], self._cache["condition"] = factorize(
                    self.loaded_matrix, self.condition_limit
                )
        return self._cache["lu"]

    @property
    def condition(self) -> float:
        self.factorization()
        return self._cache["condition"]


def _wire_pulses(length: float, wavelength: float, segments_per_halfwave: int) -> int:
    # intervals per half wave = segments_per_halfwave + 1
    intervals = ceil(length / (wavelength / 2) * (segments_per_halfwave + 1) - 1e-9)
    return max(1, intervals - 1)


def mesh_scene(
    scene: Scene,
    segments_per_halfwave: int = config.SEGMENTS_PER_HALFWAVE,
    include_tag: bool = True,
    wire_radius: float | None = None,
) -> MeshedScene:
    """Split every dipole and scatterer of ``scene`` into pulse segments.

    Args:
        scene (Scene): The scene to mesh.
        segments_per_halfwave (int): Pulses per dipole; odd and at least 5 so
            that a centre segment carries the port.
        include_tag (bool): Mesh the tag (posed at ``scene.tag_template``).
        wire_radius (float): Radius overriding every wire's own radius.

    Returns:
        MeshedScene: the segmentation, tag wire last.

    """
    if segments_per_halfwave % 2 == 0 or segments_per_halfwave < 5:
        raise MeshError(
            f"segments_per_halfwave must be odd and >= 5, got {segments_per_halfwave}"
        )

    scene.validate(include_tag=include_tag)
    lam = scene.wavelength

    def radius(spec) -> float:
        return spec.wire_radius if wire_radius is None else wire_radius

    wires = []
    for dipole in (scene.source, scene.reader):
        start, end = dipole.endpoints()
        wires.append(
            Wire(dipole.role.value, start, end, radius(dipole), segments_per_halfwave)
        )

    for k, scatterer in enumerate(scene.scatterers):
        start, end = scatterer.endpoints()
        pulses = scatterer.segments or _wire_pulses(
            scatterer.length, lam, segments_per_halfwave
        )
        wires.append(Wire(f"scatterer-{k}", start, end, radius(scatterer), pulses))

    if include_tag:
        start, end = scene.tag_template.endpoints()
        wires.append(Wire("tag", start, end, radius(scene.tag_template), segments_per_halfwave))

    for wire in wires:
        if wire.delta > lam / 10 * (1 + 1e-12):
            raise MeshError(f"Segments of {wire.label} exceed lambda/10")

    offsets = tuple(np.cumsum([0] + [w.pulses for w in wires])[:-1].tolist())
    source_port = offsets[0] + wires[0].center_pulse
    reader_port = offsets[1] + wires[1].center_pulse
    tag_port = offsets[-1] + wires[-1].center_pulse if include_tag else None

    load_table = {reader_port: complex(scene.reader.load)}
    if include_tag:
        load_table[tag_port] = 0j

    mesh = MeshedScene(
        wires=tuple(wires),
        frequency_hz=scene.frequency_hz,
        ground=scene.ground,
        source_port=int(source_port),
        reader_port=int(reader_port),
        tag_port=None if tag_port is None else int(tag_port),
        load_table=load_table,
        offsets=offsets,
    )
    logger.debug(f"Meshed {len(wires)} wires into {mesh.n_segments} segments")

    return mesh


def check_overlaps(wires, what: str = "wires") -> None:
    """Raise when two distinct wires come closer than their radius sum."""
    wires = list(wires)
    if len(wires) < 2:
        return

    start = np.array([w.start for w in wires])
    end = np.array([w.end for w in wires])
    radius = np.array([w.radius for w in wires])

    i, j = np.triu_indices(len(wires), k=1)
    distance = segment_distances(start[i], end[i], start[j], end[j])
    bad = np.flatnonzero(distance < radius[i] + radius[j])
    if bad.size:
        a, b = wires[i[bad[0]]], wires[j[bad[0]]]
        raise GeometryError(
            f"Overlapping {what}: {a.label} and {b.label} "
            f"({distance[bad[0]]:.3g} m apart)"
        )


def impedance_block(
    rows: WireSet,
    cols: WireSet,
    frequency_hz: float,
    order: int = config.QUADRATURE_ORDER,
    same: bool = False,
) -> np.ndarray:
    """Mutual impedances between the pulses of ``rows`` and ``cols``."""
    omega = 2 * np.pi * frequency_hz
    k = omega / config.SPEED_OF_LIGHT

    psi_j = potential_matrix(rows.current, cols.current, k, order, same)
    psi_q = potential_matrix(rows.charge, cols.charge, k, order, same)

    dl = np.outer(rows.current.length, cols.current.length) * (
        rows.current.direction @ cols.current.direction.T
    )
    vector = 1j * omega * config.MU_0 * dl * psi_j

    scalar = (
        psi_q[np.ix_(rows.plus, cols.plus)]
        - psi_q[np.ix_(rows.plus, cols.minus)]
        - psi_q[np.ix_(rows.minus, cols.plus)]
        + psi_q[np.ix_(rows.minus, cols.minus)]
    ) / (1j * omega * config.EPSILON_0)

    block = vector + scalar
    if same:
        # symmetric in exact arithmetic; remove the rounding residue
        block = (block + block.T) / 2

    return block


def folded_block(
    rows: WireSet,
    cols: WireSet,
    frequency_hz: float,
    ground: GroundPlaneSpec,
    order: int = config.QUADRATURE_ORDER,
    same: bool = False,
) -> np.ndarray:
    """Impedance block with the ground-plane images of ``cols`` folded in."""
    block = impedance_block(rows, cols, frequency_hz, order, same)
    if ground.present:
        block = block - impedance_block(
            rows, cols.mirrored(ground.height_z), frequency_hz, order
        )
        if same:
            block = (block + block.T) / 2

    return block


def fill_impedance_matrix(
    mesh: MeshedScene,
    f: float | None = None,
    settings: SolverSettings | None = None,
    fold_images: bool = True,
) -> SolveContext:
    """Fill the impedance matrix of ``mesh`` at frequency ``f``.

    With a ground plane and ``fold_images`` the image currents are eliminated
    and the system has one equation per real segment. Without folding, the
    image wires are kept as ordinary unknowns numbered after the real ones.
    """
    settings = settings or SolverSettings()
    f = mesh.frequency_hz if f is None else f

    wires = list(mesh.wires)
    if mesh.ground.present and not fold_images:
        wires += [w.mirrored(mesh.ground.height_z) for w in mesh.wires]
    check_overlaps(wires)

    if mesh.ground.present and fold_images:
        real = mesh.wire_set()
        matrix = folded_block(
            real, real, f, mesh.ground, settings.quadrature_order, same=True
        )
    else:
        everything = WireSet.build(wires)
        matrix = impedance_block(
            everything, everything, f, settings.quadrature_order, same=True
        )

    matrix.setflags(write=False)
    logger.debug(f"Filled {matrix.shape[0]}x{matrix.shape[0]} impedance matrix")

    return SolveContext(
        mesh=mesh,
        impedance_matrix=matrix,
        frequency_hz=f,
        folded=fold_images or not mesh.ground.present,
        condition_limit=settings.condition_limit,
    )


def apply_loads(ctx: SolveContext, loads: dict) -> SolveContext:
    """Return a context whose diagonal entries carry the extra ``loads``."""
    merged = dict(ctx.loads)
    for k, z in loads.items():
        k = int(k)
        if ctx.folded and 0 <= k < ctx.mesh.n_segments and ctx.mesh.image_flag[k]:
            raise MeshError(f"Segment {k} is an image segment and cannot carry a load")
        if not 0 <= k < ctx.size:
            raise MeshError(f"Load on segment {k} outside 0..{ctx.size - 1}")
        merged[k] = merged.get(k, 0j) + complex(z)

    return replace(ctx, loads=merged, _cache={}, _lock=threading.Lock())


def tag_state_load(
    state: TagState, open_circuit_ohms: float = config.OPEN_CIRCUIT_OHMS
) -> complex:
    return 0j if state == TagState.ON else complex(open_circuit_ohms)


def factorize(matrix: np.ndarray, condition_limit: float = config.CONDITION_LIMIT):
    """LU-factorize ``matrix`` and reject it when badly conditioned.

    Returns:
        tuple: the ``lu_factor`` pair and the 1-norm condition estimate.

    """
    lu, piv = scipy.linalg.lu_factor(matrix, check_finite=False)
    gecon = lapack.get_lapack_funcs("gecon", (lu,))
    anorm = np.linalg.norm(matrix, 1)
    rcond, info = gecon(lu, anorm, norm="1")

    condition = np.inf if rcond == 0 else 1.0 / rcond
    if info != 0 or not condition <= condition_limit:
        raise NumericalError(
            f"Impedance matrix condition estimate {condition:.3g} above {condition_limit:.3g}",
            diagnostics={"condition_estimate": float(condition), "size": matrix.shape[0]},
        )

    return (lu, piv), float(condition)


def solve(ctx: SolveContext, voltages: dict) -> np.ndarray:
    """Solve Z I = V for delta-gap voltages ``{segment: volts}``."""
    rhs = np.zeros(ctx.size, dtype=complex)
    for k, v in voltages.items():
        rhs[int(k)] = v

    if not rhs.any():
        return rhs

    return scipy.linalg.lu_solve(ctx.factorization(), rhs, check_finite=False)


def excite_and_solve(
    ctx: SolveContext, source_port: int, v_source: complex = 1.0
) -> np.ndarray:
    """Currents on every segment for a delta-gap source at ``source_port``."""
    return solve(ctx, {source_port: v_source})


def port_reading(ctx: SolveContext, currents: np.ndarray, port: int) -> PortReading:
    current = complex(currents[port])
    load = ctx.loads.get(port, 0j)

    return PortReading(
        current=current,
        voltage=current * load,
        power_w=0.5 * abs(current) ** 2 * load.real,
    )


def input_impedance(ctx: SolveContext, port: int) -> complex:
    """Drive-point impedance V / I of ``port`` with the other loads in place."""
    currents = excite_and_solve(ctx, port)
    if currents[port] == 0:
        raise NumericalError(f"No current flows at port {port}")

    return complex(1.0 / currents[port])


def switch_tag_state(
    ctx: SolveContext,
    tag_port: int,
    delta_z: complex,
    base_solution: np.ndarray,
    diagnostics: dict | None = None,
) -> np.ndarray:
    """Currents after adding ``delta_z`` to the tag load, by a rank-one update.

    ``base_solution`` solves the system of ``ctx``. The update
    I' = I - delta_z I_k / (1 + delta_z u_k) u with u = Z^-1 e_k reuses the
    factorization; when the denominator is too small the loaded system is
    re-solved from scratch and ``diagnostics["fallback"]`` is set.
    """
    diagnostics = diagnostics if diagnostics is not None else {}
    diagnostics["fallback"] = False
    if delta_z == 0:
        return np.array(base_solution, copy=True)

    e_k = np.zeros(ctx.size, dtype=complex)
    e_k[tag_port] = 1.0
    u = scipy.linalg.lu_solve(ctx.factorization(), e_k, check_finite=False)
    denominator = 1.0 + delta_z * u[tag_port]
    diagnostics["denominator"] = complex(denominator)

    if abs(denominator) < config.SHERMAN_MORRISON_MIN_DENOMINATOR:
        logger.warning(
            f"Rank-one update denominator {abs(denominator):.3g} too small, re-solving"
        )
        diagnostics["fallback"] = True
        rhs = ctx.loaded_matrix @ base_solution
        switched = apply_loads(ctx, {tag_port: delta_z})
        return scipy.linalg.lu_solve(switched.factorization(), rhs, check_finite=False)

    return base_solution - (delta_z * base_solution[tag_port] / denominator) * u


def tag_transfer(
    scene: Scene,
    tag_pose: tuple[Position3, OrientationAngles],
    settings: SolverSettings | None = None,
) -> tuple[float, float]:
    """Reader-load powers (P_on, P_off) with the tag at ``tag_pose``.

    The whole scene is meshed and solved with the tag short-circuited; the
    open-circuited state follows from a rank-one update.
    """
    settings = settings or SolverSettings()
    center, orientation = tag_pose

    reason = scene.tag_pose_violation(center, orientation)
    if reason is not None:
        raise GeometryError(f"Tag pose at {center} rejected: {reason}")

    posed = scene.with_tag(center, orientation)
    mesh = mesh_scene(
        posed,
        settings.segments_per_halfwave,
        wire_radius=settings.wire_radius,
    )
    ctx = apply_loads(fill_impedance_matrix(mesh, settings=settings), mesh.load_table)

    on = excite_and_solve(ctx, mesh.source_port)
    off = switch_tag_state(
        ctx, mesh.tag_port, tag_state_load(TagState.OFF, settings.open_circuit_ohms), on
    )

    return (
        port_reading(ctx, on, mesh.reader_port).power_w,
        port_reading(ctx, off, mesh.reader_port).power_w,
    )


class EnvironmentSolver:
    """Sweep engine: factorizes source, reader and scatterers once per scene.

    For a posed tag the full system [[E, C], [C^T, T]] is reduced to the
    Schur complement S = T - C^T E^-1 C of the tag block, so that each pose
    costs one multi-right-hand-side back-substitution against the cached
    environment factorization plus a small dense solve per tag state.
    Instances are shared read-only between sweep workers.
    """

    def __init__(self, scene: Scene, settings: SolverSettings | None = None):
        self.scene = scene
        self.settings = settings or SolverSettings()

        self.mesh = mesh_scene(
            scene,
            self.settings.segments_per_halfwave,
            include_tag=False,
            wire_radius=self.settings.wire_radius,
        )
        self.context = apply_loads(
            fill_impedance_matrix(self.mesh, settings=self.settings), self.mesh.load_table
        )
        self._factor = self.context.factorization()
        self._environment = self.mesh.wire_set()
        self.direct = excite_and_solve(self.context, self.mesh.source_port)

        self._tag_blocks: dict = {}
        self._lock = threading.Lock()

        logger.info(
            f"Environment factorized: {self.context.size} unknowns, "
            f"condition ~{self.context.condition:.3g}"
        )

    @property
    def tag_pulses(self) -> int:
        return self.settings.segments_per_halfwave

    def reference_source_power(self) -> float:
        """Power delivered by the 1 V source with the tag absent."""
        return float(0.5 * np.real(np.conj(self.direct[self.mesh.source_port])))

    def reference_reader_power(self) -> float:
        return port_reading(self.context, self.direct, self.mesh.reader_port).power_w

    def tag_wire(self, center: Position3, orientation: OrientationAngles) -> Wire:
        tag = self.scene.tag_template
        half = orientation_to_axis(orientation) * (tag.length / 2)
        c = center.as_array()
        radius = self.settings.wire_radius
        if radius is None:
            radius = tag.wire_radius

        return Wire("tag", c - half, c + half, radius, self.tag_pulses)

    def _tag_block(self, center: Position3, orientation: OrientationAngles) -> np.ndarray:
        """Folded tag self-block, computed once per distinct key.

        In free space the block is the same for every pose. Over ground it
        depends on the orientation and the height above the plane. The block
        is always built from a reference pose so that it does not depend on
        which pose asked first.
        """
        if self.scene.ground.present:
            height = round(center.z - self.scene.ground.height_z, 12)
            key = (orientation.as_tuple(), height)
            reference = self.tag_wire(
                Position3(0.0, 0.0, self.scene.ground.height_z + height), orientation
            )
        else:
            key = "free-space"
            reference = self.tag_wire(Position3(0.0, 0.0, 0.0), OrientationAngles(0.0, 0.0))

        with self._lock:
            cached = self._tag_blocks.get(key)
        if cached is not None:
            return cached

        single = WireSet.build([reference])
        block = folded_block(
            single,
            single,
            self.scene.frequency_hz,
            self.scene.ground,
            self.settings.quadrature_order,
            same=True,
        )
        with self._lock:
            return self._tag_blocks.setdefault(key, block)

    def transfer(self, center: Position3, orientation: OrientationAngles) -> tuple[float, float]:
        p_on, p_off = self.transfer_batch([center], orientation)
        return float(p_on[0]), float(p_off[0])

    def transfer_batch(
        self, centers: list[Position3], orientation: OrientationAngles
    ) -> tuple[np.ndarray, np.ndarray]:
        """Reader powers (P_on, P_off) for the tag at each of ``centers``.

        Args:
            centers (list[Position3]): Tag centres; each must pass the scene's
                pose rules.
            orientation (OrientationAngles): Tag orientation shared by the batch.

        Returns:
            tuple[np.ndarray, np.ndarray]: ON and OFF powers, one per centre.

        """
        for center in centers:
            reason = self.scene.tag_pose_violation(center, orientation)
            if reason is not None:
                raise GeometryError(f"Tag pose at {center} rejected: {reason}")

        if not centers:
            return np.zeros(0), np.zeros(0)

        wires = [self.tag_wire(c, orientation) for c in centers]
        t = self.tag_pulses
        n = len(self._environment)
        poses = len(wires)

        coupling = folded_block(
            self._environment,
            WireSet.build(wires),
            self.scene.frequency_hz,
            self.scene.ground,
            self.settings.quadrature_order,
        )
        solved = scipy.linalg.lu_solve(self._factor, coupling, check_finite=False)

        c = coupling.reshape(n, poses, t)
        x = solved.reshape(n, poses, t)
        blocks = np.stack([self._tag_block(center, orientation) for center in centers])
        reduced = blocks - np.einsum("npi,npj->pij", c, x)
        rhs = -np.einsum("npi,n->pi", c, self.direct)

        reader = self.mesh.reader_port
        load = self.context.loads.get(reader, 0j)
        port = t // 2
        powers = []
        for state in (TagState.ON, TagState.OFF):
            system = reduced.copy()
            system[:, port, port] += tag_state_load(state, self.settings.open_circuit_ohms)
            try:
                tag_currents = np.linalg.solve(system, rhs[..., None])[..., 0]
            except np.linalg.LinAlgError as error:
                raise NumericalError(
                    "Singular tag Schur complement", diagnostics={"state": state.value}
                ) from error

            reader_current = self.direct[reader] - np.einsum("pi,pi->p", x[reader], tag_currents)
            powers.append(0.5 * np.abs(reader_current) ** 2 * load.real)

        return powers[0], powers[1]
