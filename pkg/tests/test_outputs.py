import json
import time

import numpy as np
import pandas as pd
import pytest

from scripts import config
from scripts.analysis.metrics import DetectionThreshold
from scripts.analysis.sweep import OutageCurve
from scripts.config import SolverSettings
from scripts.data import outputs
from scripts.errors import SchemaError
from scripts.models.mom import apply_loads, excite_and_solve, fill_impedance_matrix, mesh_scene


@pytest.fixture(scope="module")
def loaded(los_scene):
    mesh = mesh_scene(los_scene)
    return mesh, apply_loads(fill_impedance_matrix(mesh), mesh.load_table)


def test_write_frame_float_format(tmp_path):
    df = pd.DataFrame({"x": [1 / 3, 1e-12], "label": ["a", "b"]})
    path = outputs.write_frame(df, tmp_path / "sub" / "frame.csv")

    assert path.read_text() == "x,label\n0.3333333333,a\n1e-12,b\n"


def test_debug_dump_layout(loaded, tmp_path):
    mesh, ctx = loaded
    currents = excite_and_solve(ctx, mesh.source_port)
    path = outputs.dump_debug(tmp_path / "system.ambz", ctx, currents)

    data = path.read_bytes()
    n = ctx.size
    assert data[:4] == b"AMBZ"
    assert int.from_bytes(data[4:8], "little") == 1
    assert int.from_bytes(data[8:12], "little") == n
    assert len(data) == 12 + 16 * (n * n + n)

    matrix, back = outputs.load_debug(path)
    assert np.array_equal(matrix, ctx.loaded_matrix)
    assert np.array_equal(back, currents)


def test_debug_dump_rejects_mismatched_currents(loaded, tmp_path):
    _, ctx = loaded
    with pytest.raises(ValueError):
        outputs.dump_debug(tmp_path / "bad.ambz", ctx, np.zeros(ctx.size + 1, dtype=complex))


def test_load_debug_rejects_bad_files(loaded, tmp_path):
    short = tmp_path / "short.ambz"
    short.write_bytes(b"AMB")
    with pytest.raises(SchemaError):
        outputs.load_debug(short)

    wrong = tmp_path / "wrong.ambz"
    wrong.write_bytes(b"NOPE" + bytes(8))
    with pytest.raises(SchemaError, match="not an AMBZ"):
        outputs.load_debug(wrong)

    mesh, ctx = loaded
    good = outputs.dump_debug(
        tmp_path / "good.ambz", ctx, excite_and_solve(ctx, mesh.source_port)
    )
    truncated = tmp_path / "truncated.ambz"
    truncated.write_bytes(good.read_bytes()[:-16])
    with pytest.raises(SchemaError, match="expected"):
        outputs.load_debug(truncated)


def test_build_manifest(tmp_path):
    manifest = outputs.build_manifest(
        "map",
        "{}\n",
        7,
        SolverSettings(),
        DetectionThreshold(),
        time.perf_counter(),
        argv=["ambsim", "map"],
        threads=2,
    )

    assert manifest["scene_hash"].startswith("sha256:")
    assert manifest["seed"] == 7
    assert manifest["argv"] == ["ambsim", "map"]
    assert manifest["solver"]["segments_per_halfwave"] == 11
    assert manifest["solver"]["open_circuit_ohms"] == config.OPEN_CIRCUIT_OHMS
    assert manifest["metrics"]["delta_snr_target_db"] == 3.4
    assert manifest["metrics"]["delta_snr_target_from_ber_db"] == pytest.approx(2.16, abs=0.01)
    assert manifest["assumptions"] == outputs.ASSUMPTIONS
    assert manifest["tool_version"] == config.TOOL_VERSION
    assert manifest["schema_version"] == config.SCHEMA_VERSION
    assert manifest["duration_s"] >= 0
    assert manifest["threads"] == 2

    path = outputs.write_manifest(tmp_path, manifest)
    assert path.name == "manifest.json"
    assert json.loads(path.read_text()) == manifest


def test_manifest_without_scene():
    manifest = outputs.build_manifest(
        "opssa", None, None, SolverSettings(), DetectionThreshold(), time.perf_counter(), argv=[]
    )
    assert manifest["scene_hash"] is None


def test_outage_frame_follows_tag_order(tmp_path):
    curves = [
        OutageCurve("NR-worst", (80.0, 90.0), (1.0, 0.5)),
        OutageCurve("IPR", (80.0, 90.0), (0.4, 0.0)),
        OutageCurve("4PR", (80.0, 90.0), (0.6, 0.1)),
    ]
    df = outputs.outage_frame(curves)

    assert df.columns.tolist() == ["tag_type", "snr_tx_db", "outage"]
    assert df.tag_type.tolist() == ["IPR", "IPR", "4PR", "4PR", "NR-worst", "NR-worst"]
    assert df.snr_tx_db.tolist() == [80.0, 90.0] * 3

    paths = outputs.write_outage(curves, tmp_path)
    assert sorted(p.name for p in paths) == [
        "outage.csv",
        "outage_4PR.csv",
        "outage_IPR.csv",
        "outage_NR-worst.csv",
    ]
