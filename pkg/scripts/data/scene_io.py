"""Scene files: JSON documents describing a scene, and custom orientation tables.

A scene file holds ``schema_version``, ``frequency_hz``, the three dipoles
(``source``, ``reader``, ``tag_template``), a ``scatterers`` array, the
``ground`` plane and the ``rng_seed`` it was generated with. Lengths are in
meters and angles in degrees.
"""

import json
from pathlib import Path

import pandas as pd

from scripts import config
from scripts.errors import SceneError, SchemaError
from scripts.logger import logger
from scripts.models.scene import (
    DipoleSpec,
    GroundPlaneSpec,
    OrientationAngles,
    PolarizationSet,
    Position3,
    Role,
    ScattererSpec,
    Scene,
    custom_polarization_set,
)
from scripts.utils import atomic_write_text, canonical_json

REQUIRED_KEYS: tuple = (
    "schema_version",
    "frequency_hz",
    "source",
    "reader",
    "tag_template",
    "scatterers",
    "ground",
)


def _dipole_to_dict(dipole: DipoleSpec) -> dict:
    return {
        "center": [dipole.center.x, dipole.center.y, dipole.center.z],
        "orientation": list(dipole.orientation.as_tuple()),
        "length": dipole.length,
        "wire_radius": dipole.wire_radius,
        "load": [complex(dipole.load).real, complex(dipole.load).imag],
    }


def _scatterer_to_dict(scatterer: ScattererSpec) -> dict:
    out = {
        "center": [scatterer.center.x, scatterer.center.y, scatterer.center.z],
        "orientation": list(scatterer.orientation.as_tuple()),
        "length": scatterer.length,
        "wire_radius": scatterer.wire_radius,
    }
    if scatterer.segments is not None:
        out["segments"] = scatterer.segments

    return out


def scene_to_dict(scene: Scene) -> dict:
    return {
        "schema_version": config.SCHEMA_VERSION,
        "frequency_hz": scene.frequency_hz,
        "source": _dipole_to_dict(scene.source),
        "reader": _dipole_to_dict(scene.reader),
        "tag_template": _dipole_to_dict(scene.tag_template),
        "scatterers": [_scatterer_to_dict(s) for s in scene.scatterers],
        "ground": {"present": scene.ground.present, "height_z": scene.ground.height_z},
        "rng_seed": scene.rng_seed,
    }


def scene_to_text(scene: Scene) -> str:
    return canonical_json(scene_to_dict(scene))


def _locate(text: str | None, key: str) -> tuple[int | None, int | None]:
    """Line and column of the first occurrence of ``"key"`` in ``text``."""
    if not text:
        return None, None

    offset = text.find(f'"{key}"')
    if offset < 0:
        return None, None
    line = text.count("\n", 0, offset) + 1
    column = offset - (text.rfind("\n", 0, offset) + 1) + 1

    return line, column


def _field(payload: dict, key: str, where: str, text: str | None):
    if not isinstance(payload, dict) or key not in payload:
        line, column = _locate(text, where.split("[")[0])
        raise SchemaError(f"Missing key {key!r} in {where or 'scene'}", line, column)

    return payload[key]


def _number_list(value, size: int, key: str, text: str | None) -> list[float]:
    if not isinstance(value, list) or len(value) != size:
        raise SchemaError(f"{key!r} must be a list of {size} numbers", *_locate(text, key))
    try:
        return [float(v) for v in value]
    except (TypeError, ValueError) as error:
        raise SchemaError(f"{key!r} must hold numbers", *_locate(text, key)) from error


def _dipole_from_dict(payload: dict, role: Role, text: str | None) -> DipoleSpec:
    name = role.value if role != Role.TAG else "tag_template"
    center = _number_list(_field(payload, "center", name, text), 3, "center", text)
    orientation = _number_list(
        _field(payload, "orientation", name, text), 2, "orientation", text
    )
    load = _number_list(payload.get("load", [0.0, 0.0]), 2, "load", text)

    return DipoleSpec(
        center=Position3(*center),
        orientation=OrientationAngles(*orientation),
        length=float(_field(payload, "length", name, text)),
        wire_radius=float(_field(payload, "wire_radius", name, text)),
        role=role,
        load=complex(*load),
    )


def _scatterer_from_dict(payload: dict, k: int, text: str | None) -> ScattererSpec:
    where = f"scatterers[{k}]"
    segments = payload.get("segments") if isinstance(payload, dict) else None

    return ScattererSpec(
        center=Position3(*_number_list(_field(payload, "center", where, text), 3, "center", text)),
        orientation=OrientationAngles(
            *_number_list(_field(payload, "orientation", where, text), 2, "orientation", text)
        ),
        length=float(_field(payload, "length", where, text)),
        wire_radius=float(_field(payload, "wire_radius", where, text)),
        segments=None if segments is None else int(segments),
    )


def scene_from_dict(payload: dict, text: str | None = None) -> Scene:
    """Build a scene from a parsed scene document.

    Args:
        payload (dict): Parsed JSON.
        text (str): The source text, used to point errors at a line.

    Returns:
        Scene: the validated scene.

    """
    if not isinstance(payload, dict):
        raise SchemaError("A scene file must hold a JSON object", 1, 1)

    for key in REQUIRED_KEYS:
        if key not in payload:
            raise SchemaError(f"Missing top-level key {key!r}")

    version = payload["schema_version"]
    if version != config.SCHEMA_VERSION:
        raise SchemaError(
            f"Unsupported schema_version {version!r} (expected {config.SCHEMA_VERSION})",
            *_locate(text, "schema_version"),
        )

    if not isinstance(payload["scatterers"], list):
        raise SchemaError("'scatterers' must be an array", *_locate(text, "scatterers"))

    ground = payload["ground"]
    try:
        scene = Scene(
            frequency_hz=float(payload["frequency_hz"]),
            source=_dipole_from_dict(payload["source"], Role.SOURCE, text),
            reader=_dipole_from_dict(payload["reader"], Role.READER, text),
            tag_template=_dipole_from_dict(payload["tag_template"], Role.TAG, text),
            scatterers=tuple(
                _scatterer_from_dict(s, k, text) for k, s in enumerate(payload["scatterers"])
            ),
            ground=GroundPlaneSpec(
                present=bool(_field(ground, "present", "ground", text)),
                height_z=float(_field(ground, "height_z", "ground", text)),
            ),
            rng_seed=payload.get("rng_seed"),
        )
    except SceneError:
        raise
    except (TypeError, ValueError) as error:
        raise SchemaError(f"Malformed value in scene file: {error}") from error

    return scene.validate()


def read_scene(path: Path) -> tuple[Scene, str]:
    """Read and validate a scene file.

    Returns:
        tuple[Scene, str]: the scene and the exact text read, which manifests hash.

    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as error:
        raise SchemaError(f"{path.name}: {error.msg}", error.lineno, error.colno) from error

    scene = scene_from_dict(payload, text)
    logger.info(f"Loaded scene {path.name} with {len(scene.scatterers)} scatterers")

    return scene, text


def write_scene(scene: Scene, path: Path) -> Path:
    path = atomic_write_text(Path(path), scene_to_text(scene))
    logger.info(f"Scene written to {path}")

    return path


def read_polarization_file(path: Path) -> PolarizationSet:
    """Custom tag orientations from a CSV with ``phi_deg`` and ``theta_deg`` columns."""
    path = Path(path)
    try:
        table = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as error:
        raise SchemaError(f"Cannot read orientation file {path}: {error}") from error

    missing = {"phi_deg", "theta_deg"} - set(table.columns)
    if missing:
        raise SchemaError(f"Orientation file {path.name} lacks columns {sorted(missing)}", 1, 1)

    orientations = [
        OrientationAngles(float(row.phi_deg), float(row.theta_deg))
        for row in table.itertuples(index=False)
    ]

    return custom_polarization_set(orientations, name=path.stem)
