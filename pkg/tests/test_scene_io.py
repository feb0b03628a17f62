import json

import pytest

from scripts.data.scene_io import (
    read_polarization_file,
    read_scene,
    scene_from_dict,
    scene_to_dict,
    scene_to_text,
    write_scene,
)
from scripts.errors import SchemaError
from scripts.models.scene import OrientationAngles, PolarizationLabel, preset_scene


@pytest.fixture(scope="module")
def table1():
    scene, _ = preset_scene("Table1Scattering", seed=7)
    return scene


def test_write_then_read(table1, tmp_path):
    path = write_scene(table1, tmp_path / "scene.json")
    scene, text = read_scene(path)

    assert scene == table1
    assert text == path.read_text(encoding="utf-8")
    assert len(scene.scatterers) == 20
    assert scene.rng_seed == 7


def test_chamber_scene_keeps_segment_counts(tmp_path):
    chamber, _ = preset_scene("ExperimentChamber")
    scene, _ = read_scene(write_scene(chamber, tmp_path / "chamber.json"))

    assert scene == chamber
    assert all(s.segments is not None for s in scene.scatterers)


def test_same_seed_gives_identical_bytes(tmp_path):
    a = write_scene(preset_scene("table1", seed=11)[0], tmp_path / "a.json")
    b = write_scene(preset_scene("table1", seed=11)[0], tmp_path / "b.json")
    c = write_scene(preset_scene("table1", seed=12)[0], tmp_path / "c.json")

    assert a.read_bytes() == b.read_bytes()
    assert a.read_bytes() != c.read_bytes()


def test_corrupted_file_points_at_a_line(table1, tmp_path):
    path = tmp_path / "broken.json"
    lines = scene_to_text(table1).splitlines()
    lines[5] = lines[5] + " ]]"
    path.write_text("\n".join(lines), encoding="utf-8")

    with pytest.raises(SchemaError) as excinfo:
        read_scene(path)
    assert excinfo.value.line == 6
    assert "line 6" in str(excinfo.value)


def test_missing_key(table1):
    payload = scene_to_dict(table1)
    del payload["reader"]
    with pytest.raises(SchemaError, match="reader"):
        scene_from_dict(payload)

    payload = scene_to_dict(table1)
    del payload["source"]["wire_radius"]
    with pytest.raises(SchemaError, match="wire_radius"):
        scene_from_dict(payload)


def test_wrong_schema_version(table1):
    payload = scene_to_dict(table1)
    payload["schema_version"] = 99
    text = json.dumps(payload, indent=2)

    with pytest.raises(SchemaError, match="schema_version") as excinfo:
        scene_from_dict(payload, text)
    assert excinfo.value.line is not None


def test_malformed_vector(table1):
    payload = scene_to_dict(table1)
    payload["reader"]["center"] = [1.0, 2.0]
    with pytest.raises(SchemaError, match="center"):
        scene_from_dict(payload)

    payload["reader"]["center"] = [1.0, "x", 0.0]
    with pytest.raises(SchemaError):
        scene_from_dict(payload)


def test_read_polarization_file(tmp_path):
    path = tmp_path / "three_axes.csv"
    path.write_text("phi_deg,theta_deg\n0,0\n45,90\n90,45\n", encoding="utf-8")

    pols = read_polarization_file(path)
    assert pols.label == PolarizationLabel.CUSTOM
    assert pols.name == "three_axes"
    assert list(pols) == [
        OrientationAngles(0, 0),
        OrientationAngles(45, 90),
        OrientationAngles(90, 45),
    ]


def test_polarization_file_without_columns(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("phi,theta\n0,0\n", encoding="utf-8")
    with pytest.raises(SchemaError, match="theta_deg"):
        read_polarization_file(path)
