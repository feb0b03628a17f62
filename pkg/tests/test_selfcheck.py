from scripts.analysis.selfcheck import LIMITS, run_selfcheck, selfcheck_scene, symmetry_error
from scripts.config import SolverSettings
from scripts.models.mom import fill_impedance_matrix, mesh_scene


def test_selfcheck_scene():
    scene = selfcheck_scene(seed=3)
    assert scene.ground.present
    assert len(scene.scatterers) == 3
    assert scene.reader.center.x == 1.0


def test_run_selfcheck_report(desk_scene_small):
    report = run_selfcheck(scene=desk_scene_small)

    assert report.columns.tolist() == ["check", "value", "limit", "status"]
    assert set(report.check) == set(LIMITS)
    assert set(report.status) <= {"pass", "fail"}

    checks = report.set_index("check")
    for name in ("symmetry", "reciprocity", "rank_one_update", "image_equivalence"):
        assert checks.loc[name, "status"] == "pass", name


def test_changed_settings_are_reported_as_config(desk_scene_small):
    report = run_selfcheck(SolverSettings(open_circuit_ohms=1e5), desk_scene_small)

    config_rows = report.loc[report.status == "config"].set_index("check")
    assert config_rows.index.tolist() == ["open_circuit_ohms"]
    assert config_rows.loc["open_circuit_ohms", "value"] == 1e5
    assert config_rows.loc["open_circuit_ohms", "limit"] == 1e6


def test_symmetry_error_is_tiny(los_scene):
    assert symmetry_error(fill_impedance_matrix(mesh_scene(los_scene))) < LIMITS["symmetry"]
