"""Scene geometry: dipoles, scatterers, ground plane, presets and tag orientations.

Angles follow one convention everywhere: ``phi`` is the polar tilt from +z and
``theta`` the azimuth from +x, both in degrees. A dipole axis and its negation
are the same antenna, so every axis has a canonical half-sphere form with
``phi`` in [0, 180) and ``theta`` in [0, 180).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Literal

import numpy as np

from scripts import config
from scripts.errors import GeometryError, InfeasibleConstraintsError, SceneError
from scripts.logger import logger
from scripts.utils import unit

PresetName = Literal["Table1Scattering", "LosCrossPol", "ExperimentChamber"]
PolarizationKind = Literal["nr", "nr-worst", "4pr", "ipr"]

PRESET_ALIASES: dict = {
    "table1": "Table1Scattering",
    "table1scattering": "Table1Scattering",
    "los": "LosCrossPol",
    "loscrosspol": "LosCrossPol",
    "experiment": "ExperimentChamber",
    "experimentchamber": "ExperimentChamber",
}

# rounding applied to angles recovered from axes, in degrees
ANGLE_DECIMALS: int = 9


class Role(str, Enum):
    SOURCE = "source"
    TAG = "tag"
    READER = "reader"


class TagState(str, Enum):
    """ON short-circuits the tag port (backscattering), OFF opens it (transparent)."""

    ON = "on"
    OFF = "off"


class PolarizationLabel(str, Enum):
    NR = "NR"
    FOUR_PR = "FourPR"
    IPR = "IPR"
    CUSTOM = "Custom"


@dataclass(frozen=True)
class OrientationAngles:
    """Dipole axis direction as (phi, theta) in degrees.

    Both angles are accepted on the closed range [0, 180] so that the closed
    22.5 degree IPR grid can be stored verbatim; ``canonical()`` gives the
    half-open representative of the same axis.
    """

    phi_deg: float
    theta_deg: float

    def __post_init__(self):
        for name, value in (("phi_deg", self.phi_deg), ("theta_deg", self.theta_deg)):
            if not math.isfinite(value) or not 0.0 <= value <= 180.0:
                raise SceneError(f"{name}={value} outside [0, 180] degrees")

    def axis(self) -> np.ndarray:
        return orientation_to_axis(self)

    def canonical(self) -> "OrientationAngles":
        return OrientationAngles.from_axis(self.axis())

    def is_canonical(self) -> bool:
        return self.phi_deg < 180.0 and self.theta_deg < 180.0

    @classmethod
    def from_axis(cls, axis) -> "OrientationAngles":
        """Canonical angles of the (sign-free) axis ``axis``."""
        u = unit(axis)
        phi = math.degrees(math.acos(float(np.clip(u[2], -1.0, 1.0))))
        phi = round(phi, ANGLE_DECIMALS)

        if phi == 0.0 or phi == 180.0:
            return cls(0.0, 0.0)

        theta = round(math.degrees(math.atan2(u[1], u[0])), ANGLE_DECIMALS)
        if theta < 0.0 or theta >= 180.0:
            # use the antipodal representative
            phi = round(180.0 - phi, ANGLE_DECIMALS)
            theta = round(theta + 180.0 if theta < 0.0 else theta - 180.0, ANGLE_DECIMALS)

        return cls(phi + 0.0, theta + 0.0)

    def as_tuple(self) -> tuple[float, float]:
        return (self.phi_deg, self.theta_deg)


@dataclass(frozen=True)
class Position3:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.z)):
            raise SceneError(f"Non-finite position {self}")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    def distance_to(self, other: "Position3") -> float:
        return float(np.linalg.norm(self.as_array() - other.as_array()))

    @classmethod
    def from_array(cls, values) -> "Position3":
        x, y, z = (float(v) for v in values)
        return cls(x, y, z)


@dataclass(frozen=True)
class DipoleSpec:
    """Half-wave dipole of a source, tag or reader.

    ``load`` is the port load in ohms. For the source it is unused (the port
    carries the delta-gap feed); for the tag it is replaced per state.
    """

    center: Position3
    orientation: OrientationAngles
    length: float
    wire_radius: float
    role: Role
    load: complex = 0j

    def __post_init__(self):
        if not self.length > 0:
            raise SceneError(f"{self.role.value} dipole length must be positive")
        if not 0 < self.wire_radius <= self.length * config.MAX_RADIUS_FRACTION:
            raise SceneError(
                f"{self.role.value} wire radius {self.wire_radius} must lie in "
                f"(0, length/50]"
            )

    def endpoints(self) -> tuple[np.ndarray, np.ndarray]:
        return wire_endpoints(self.center, self.orientation, self.length)


@dataclass(frozen=True)
class ScattererSpec:
    """Conductive line scatterer; ``segments`` overrides the meshing rule."""

    center: Position3
    orientation: OrientationAngles
    length: float
    wire_radius: float
    segments: int | None = None

    def __post_init__(self):
        if not self.length > 0:
            raise SceneError("Scatterer length must be positive")
        if not self.wire_radius > 0:
            raise SceneError("Scatterer wire radius must be positive")
        if self.segments is not None and self.segments < 1:
            raise SceneError("Scatterer segment override must be >= 1")

    def endpoints(self) -> tuple[np.ndarray, np.ndarray]:
        return wire_endpoints(self.center, self.orientation, self.length)


@dataclass(frozen=True)
class GroundPlaneSpec:
    """Perfectly conducting plane z = height_z."""

    present: bool = False
    height_z: float = 0.0


@dataclass(frozen=True)
class Scene:
    frequency_hz: float
    source: DipoleSpec
    reader: DipoleSpec
    tag_template: DipoleSpec
    scatterers: tuple = ()
    ground: GroundPlaneSpec = field(default_factory=GroundPlaneSpec)
    rng_seed: int | None = None

    def __post_init__(self):
        if not self.frequency_hz > 0:
            raise SceneError("Frequency must be positive")
        object.__setattr__(self, "scatterers", tuple(self.scatterers))
        roles = (self.source.role, self.reader.role, self.tag_template.role)
        if roles != (Role.SOURCE, Role.READER, Role.TAG):
            raise SceneError(f"Dipole roles out of place: {roles}")

    @property
    def wavelength(self) -> float:
        return config.SPEED_OF_LIGHT / self.frequency_hz

    @property
    def dipoles(self) -> tuple[DipoleSpec, DipoleSpec, DipoleSpec]:
        return (self.source, self.reader, self.tag_template)

    def with_tag(
        self, center: Position3, orientation: OrientationAngles | None = None
    ) -> "Scene":
        tag = replace(
            self.tag_template,
            center=center,
            orientation=orientation or self.tag_template.orientation,
        )
        return replace(self, tag_template=tag)

    def with_scatterers(self, scatterers) -> "Scene":
        return replace(self, scatterers=tuple(scatterers))

    def validate(self, include_tag: bool = True) -> "Scene":
        """Check the pairwise separation and ground-plane clearance rules."""
        dipoles = self.dipoles if include_tag else (self.source, self.reader)
        min_sep = config.MIN_DIPOLE_SEPARATION_WAVELENGTHS * self.wavelength

        for i, a in enumerate(dipoles):
            for b in dipoles[i + 1 :]:
                distance = a.center.distance_to(b.center)
                if not distance > min_sep:
                    raise GeometryError(
                        f"{a.role.value}-{b.role.value} separation {distance:.4g} m "
                        f"is not above lambda/2 = {min_sep:.4g} m"
                    )

        if self.ground.present:
            wires = list(dipoles) + list(self.scatterers)
            for wire in wires:
                lowest = min(p[2] for p in wire.endpoints())
                if not lowest > self.ground.height_z:
                    raise GeometryError(
                        f"Wire centred at {wire.center} reaches the ground plane "
                        f"z={self.ground.height_z}"
                    )

        return self

    def tag_pose_violation(
        self, center: Position3, orientation: OrientationAngles | None = None
    ) -> str | None:
        """Reason why the tag cannot sit at ``center``, or None when it can."""
        min_sep = config.MIN_DIPOLE_SEPARATION_WAVELENGTHS * self.wavelength
        tag = self.tag_template

        for other in (self.source, self.reader):
            if not center.distance_to(other.center) > min_sep:
                return f"within lambda/2 of the {other.role.value}"

        clearance = tag.length / 2 + 2 * tag.wire_radius
        point = center.as_array()
        for k, scatterer in enumerate(self.scatterers):
            start, end = scatterer.endpoints()
            if point_segment_distance(point, start, end) <= clearance + scatterer.wire_radius:
                return f"overlaps scatterer {k}"

        if self.ground.present:
            orientation = orientation or tag.orientation
            dz = abs(orientation_to_axis(orientation)[2]) * tag.length / 2
            if not center.z - dz > self.ground.height_z:
                return "reaches the ground plane"

        return None


@dataclass(frozen=True)
class PolarizationSet:
    """Candidate tag orientations as (phi, theta) grid entries.

    Duplicates are judged on the raw angle pair, so two entries may still
    describe the same axis: the closed 9 x 9 IPR grid holds 81 entries but
    57 distinct axes. Solves run once per distinct axis.
    """

    label: PolarizationLabel
    orientations: tuple
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "orientations", tuple(self.orientations))
        if not self.orientations:
            raise SceneError("A polarization set needs at least one orientation")

        pairs = [o.as_tuple() for o in self.orientations]
        if len(set(pairs)) != len(pairs):
            raise SceneError("Duplicate (phi, theta) entries in polarization set")

        expected = {
            PolarizationLabel.NR: 1,
            PolarizationLabel.FOUR_PR: 4,
            PolarizationLabel.IPR: 81,
        }.get(self.label)
        if expected is not None and len(pairs) != expected:
            raise SceneError(
                f"{self.label.value} set must hold {expected} orientations, got {len(pairs)}"
            )

        if not self.name:
            object.__setattr__(self, "name", self.label.value)

    def __len__(self) -> int:
        return len(self.orientations)

    def __iter__(self):
        return iter(self.orientations)

    def distinct_axes(self) -> tuple:
        return distinct_axes(self.orientations)


def distinct_axes(orientations) -> tuple:
    """Canonical orientations of ``orientations`` in first-seen order."""
    return tuple(dict.fromkeys(o.canonical() for o in orientations))


def orientation_to_axis(o: OrientationAngles) -> np.ndarray:
    """Unit vector (sin phi cos theta, sin phi sin theta, cos phi)."""
    phi = math.radians(o.phi_deg)
    theta = math.radians(o.theta_deg)

    axis = np.array(
        [math.sin(phi) * math.cos(theta), math.sin(phi) * math.sin(theta), math.cos(phi)]
    )
    # exact zeros at the grid angles keep symmetric layouts symmetric
    axis[np.abs(axis) < 1e-15] = 0.0

    return axis / np.linalg.norm(axis)


def wire_endpoints(
    center: Position3, orientation: OrientationAngles, length: float
) -> tuple[np.ndarray, np.ndarray]:
    half = orientation_to_axis(orientation) * (length / 2)
    c = center.as_array()
    return c - half, c + half


def point_segment_distance(point: np.ndarray, start: np.ndarray, end: np.ndarray) -> float:
    direction = end - start
    t = np.dot(point - start, direction) / np.dot(direction, direction)
    closest = start + np.clip(t, 0.0, 1.0) * direction
    return float(np.linalg.norm(point - closest))


def _random_axis(rng: np.random.Generator) -> OrientationAngles:
    """Axis uniform on the sphere, folded onto the half-sphere."""
    while True:
        v = rng.normal(size=3)
        if np.linalg.norm(v) > 1e-9:
            return OrientationAngles.from_axis(v)


def generate_scatterers(
    seed: int,
    count: int,
    scene: Scene,
    min_dist_to_dipoles: float | None = None,
    max_dist_to_reader: float | None = None,
    attempts: int = config.SCATTERER_ATTEMPTS,
    length: float | None = None,
    wire_radius: float | None = None,
) -> list[ScattererSpec]:
    """Place ``count`` half-wave scatterers at random around the reader.

    Every scatterer keeps more than ``min_dist_to_dipoles`` (default λ) from
    each dipole centre, less than ``max_dist_to_reader`` (default 10λ) from the
    reader, more than its own length from the other scatterers, and stays
    above the ground plane. Orientations are uniform over the axis half-sphere.

    Args:
        seed (int): Seed of the random generator; equal seeds give equal lists.
        count (int): Number of scatterers.
        scene (Scene): Scene providing the dipoles, wavelength and ground plane.
        min_dist_to_dipoles (float): Exclusion radius around dipoles (m).
        max_dist_to_reader (float): Radius of the placement ball (m).
        attempts (int): Rejection-sampling cap over the whole draw.
        length (float): Scatterer length (default λ/2).
        wire_radius (float): Scatterer radius (default: source radius).

    Returns:
        list[ScattererSpec]: the scatterers, in draw order.

    """
    if count < 0:
        raise ValueError("count must be >= 0")

    lam = scene.wavelength
    min_dist = lam if min_dist_to_dipoles is None else min_dist_to_dipoles
    max_dist = 10 * lam if max_dist_to_reader is None else max_dist_to_reader
    length = lam / 2 if length is None else length
    radius = scene.source.wire_radius if wire_radius is None else wire_radius

    if max_dist <= 0 or min_dist < 0:
        raise InfeasibleConstraintsError("Empty scatterer placement region")

    rng = np.random.default_rng(seed)
    reader = scene.reader.center.as_array()
    dipoles = [d.center.as_array() for d in scene.dipoles]

    placed: list[ScattererSpec] = []
    tries = 0
    while len(placed) < count:
        if tries >= attempts:
            raise InfeasibleConstraintsError(
                f"Placed {len(placed)}/{count} scatterers after {attempts} attempts"
            )
        tries += 1

        offset = rng.uniform(-max_dist, max_dist, size=3)
        orientation = _random_axis(rng)
        if not np.linalg.norm(offset) < max_dist:
            continue

        center = reader + offset
        if any(not np.linalg.norm(center - d) > min_dist for d in dipoles):
            continue
        if any(
            not np.linalg.norm(center - s.center.as_array()) > max(length, s.length)
            for s in placed
        ):
            continue
        if scene.ground.present:
            dz = abs(orientation_to_axis(orientation)[2]) * length / 2
            if not center[2] - dz > scene.ground.height_z + radius:
                continue

        placed.append(
            ScattererSpec(
                center=Position3.from_array(center),
                orientation=orientation,
                length=length,
                wire_radius=radius,
            )
        )

    logger.debug(f"Placed {count} scatterers in {tries} attempts (seed {seed})")

    return placed


def _dipole(
    center: tuple, orientation: tuple, role: Role, lam: float, load: complex = 0j
) -> DipoleSpec:
    return DipoleSpec(
        center=Position3(*center),
        orientation=OrientationAngles(*orientation),
        length=lam / 2,
        wire_radius=lam * config.WIRE_RADIUS_WAVELENGTHS,
        role=role,
        load=load,
    )


def _base_scene(
    reader_x: float, frequency_hz: float = config.DEFAULT_FREQUENCY_HZ
) -> Scene:
    lam = config.SPEED_OF_LIGHT / frequency_hz
    return Scene(
        frequency_hz=frequency_hz,
        source=_dipole((0.0, 0.0, 0.3), (0, 0), Role.SOURCE, lam),
        reader=_dipole(
            (reader_x, 0.0, 0.3), (90, 90), Role.READER, lam, config.READER_LOAD_OHMS
        ),
        tag_template=_dipole(
            (reader_x / 2, 0.3, 0.3), (45, 90), Role.TAG, lam, 0j
        ),
    )


# (center, outward-facing normal, side in wavelengths) of the chamber reflectors
CHAMBER_PANELS: tuple = (
    ((0.17, 0.40, 0.00), (0.0, -1.0, 0.0), 1.2),
    ((0.17, -0.42, 0.05), (0.2, 1.0, 0.0), 1.0),
    ((-0.30, 0.05, 0.00), (1.0, 0.0, 0.1), 1.0),
    ((0.65, -0.05, 0.02), (-1.0, 0.2, 0.0), 0.9),
    ((0.45, 0.35, -0.05), (-1.0, -1.0, 0.0), 0.8),
    ((0.10, 0.00, 0.45), (0.0, 0.3, -1.0), 0.7),
)


def wire_grid_panel(
    center, normal, side: float, lam: float, pitch: float | None = None
) -> list[ScattererSpec]:
    """Square reflector made of two crossed layers of parallel wires.

    The layers are offset by λ/50 along the normal so that no two wires touch.

    Args:
        center: Panel centre (m).
        normal: Panel normal (any length).
        side (float): Side length (m).
        lam (float): Wavelength (m).
        pitch (float): Wire spacing (default λ/10).

    """
    pitch = lam * config.PANEL_PITCH_WAVELENGTHS if pitch is None else pitch
    n = unit(normal)
    helper = np.array([0.0, 0.0, 1.0]) if abs(n[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    e1 = unit(np.cross(n, helper))
    e2 = unit(np.cross(n, e1))
    c = np.asarray(center, dtype=float)

    count = int(round(side / pitch)) + 1
    offsets = (np.arange(count) - (count - 1) / 2) * pitch
    segments = max(1, math.ceil(side / (lam / 10)))
    radius = lam * config.WIRE_RADIUS_WAVELENGTHS

    wires = []
    for layer, (along, across) in enumerate(((e1, e2), (e2, e1))):
        shift = layer * (lam / 50) * n
        orientation = OrientationAngles.from_axis(along)
        for offset in offsets:
            wires.append(
                ScattererSpec(
                    center=Position3.from_array(c + offset * across + shift),
                    orientation=orientation,
                    length=side,
                    wire_radius=radius,
                    segments=segments,
                )
            )

    return wires


def preset_scene(name: str, seed: int = 7) -> tuple[Scene, PolarizationSet]:
    """Build one of the named scene presets and its default polarization set.

    Args:
        name (str): Table1Scattering, LosCrossPol or ExperimentChamber (the
            short aliases table1, los and experiment are accepted too).
        seed (int): Seed for the randomized scatterers of Table1Scattering.

    Returns:
        tuple[Scene, PolarizationSet]: the scene and its default tag set.

    """
    key = PRESET_ALIASES.get(name.lower().replace("-", "").replace("_", ""), name)

    if key == "Table1Scattering":
        base = _base_scene(reader_x=100.0)
        scene = replace(base, ground=GroundPlaneSpec(present=True, height_z=0.0), rng_seed=seed)
        scene = scene.with_scatterers(generate_scatterers(seed, 20, scene))
        return scene.validate(), polarization_set("4pr")

    if key == "LosCrossPol":
        return _base_scene(reader_x=100.0).validate(), polarization_set("ipr")

    if key == "ExperimentChamber":
        lam = config.SPEED_OF_LIGHT / config.DEFAULT_FREQUENCY_HZ
        panels = [
            wire
            for center, normal, side in CHAMBER_PANELS
            for wire in wire_grid_panel(center, normal, side * lam, lam)
        ]
        scene = Scene(
            frequency_hz=config.DEFAULT_FREQUENCY_HZ,
            source=_dipole((0.0, 0.0, 0.0), (0, 0), Role.SOURCE, lam),
            reader=_dipole((0.35, 0.0, 0.0), (90, 90), Role.READER, lam, config.READER_LOAD_OHMS),
            tag_template=_dipole((0.175, 0.1, 0.0), (45, 90), Role.TAG, lam),
            scatterers=tuple(panels),
        )
        return scene.validate(), polarization_set("4pr")

    raise SceneError(f"Unknown preset {name!r}")


def desk_scene(seed: int = 7, reader_x: float = 10.0, count: int = 20) -> Scene:
    """Table1Scattering layout with the reader pulled in to desk distance."""
    base = _base_scene(reader_x=reader_x)
    scene = replace(base, ground=GroundPlaneSpec(present=True, height_z=0.0), rng_seed=seed)
    return scene.with_scatterers(generate_scatterers(seed, count, scene)).validate()


def polarization_set(kind: str) -> PolarizationSet:
    """Tag orientation sets: nr (best fixed), nr-worst, 4pr and ipr.

    The IPR set is the 9 x 9 grid of 22.5 degree steps over the closed ranges
    phi, theta in [0, 180]; it contains the 4PR set.
    """
    kind = kind.lower()
    if kind == "nr":
        return PolarizationSet(PolarizationLabel.NR, (OrientationAngles(45, 90),), "NR-best")
    if kind == "nr-worst":
        return PolarizationSet(PolarizationLabel.NR, (OrientationAngles(90, 90),), "NR-worst")
    if kind == "4pr":
        return PolarizationSet(
            PolarizationLabel.FOUR_PR,
            tuple(OrientationAngles(phi, 90) for phi in (0, 45, 90, 135)),
            "4PR",
        )
    if kind == "ipr":
        steps = [22.5 * i for i in range(9)]
        return PolarizationSet(
            PolarizationLabel.IPR,
            tuple(OrientationAngles(phi, theta) for phi in steps for theta in steps),
            "IPR",
        )

    raise SceneError(f"Unknown polarization set {kind!r}")


def custom_polarization_set(orientations, name: str = "Custom") -> PolarizationSet:
    return PolarizationSet(PolarizationLabel.CUSTOM, tuple(orientations), name)


CONFIGURATIONS: dict = {
    "LOS-NR-Worst": ("LosCrossPol", "nr-worst"),
    "LOS-NR-Best": ("LosCrossPol", "nr"),
    "LOS-4PR": ("LosCrossPol", "4pr"),
    "LOS-IPR": ("LosCrossPol", "ipr"),
    "SCAT-NR-Worst": ("Table1Scattering", "nr-worst"),
    "SCAT-NR-Best": ("Table1Scattering", "nr"),
    "SCAT-4PR": ("Table1Scattering", "4pr"),
    "SCAT-IPR": ("Table1Scattering", "ipr"),
}


def configuration(name: str, seed: int = 7) -> tuple[Scene, PolarizationSet]:
    """One of the eight LOS/scattering x tag-type configurations."""
    if name not in CONFIGURATIONS:
        raise SceneError(f"Unknown configuration {name!r}; choose from {list(CONFIGURATIONS)}")

    preset, kind = CONFIGURATIONS[name]
    scene, _ = preset_scene(preset, seed=seed)

    return scene, polarization_set(kind)


def experiment_grid(
    x_start: float = 0.03, y_start: float = -0.15, step: float = 0.01, points: int = 29
) -> list[Position3]:
    """Scan trajectory of the chamber measurement, row by row in y then x."""
    return [
        Position3(round(x_start + i * step, 9), round(y_start + j * step, 9), 0.0)
        for j in range(points)
        for i in range(points)
    ]
