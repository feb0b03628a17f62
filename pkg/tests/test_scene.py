import math

import numpy as np
import pytest

from scripts.errors import GeometryError, InfeasibleConstraintsError, SceneError
from scripts.models.scene import (
    CONFIGURATIONS,
    DipoleSpec,
    OrientationAngles,
    PolarizationLabel,
    PolarizationSet,
    Position3,
    Role,
    configuration,
    custom_polarization_set,
    experiment_grid,
    generate_scatterers,
    orientation_to_axis,
    polarization_set,
    preset_scene,
)


@pytest.mark.parametrize(
    "angles, expected",
    [
        ((0, 0), (0, 0, 1)),
        ((90, 90), (0, 1, 0)),
        ((45, 90), (0, math.sqrt(2) / 2, math.sqrt(2) / 2)),
    ],
)
def test_orientation_to_axis(angles, expected):
    axis = orientation_to_axis(OrientationAngles(*angles))
    np.testing.assert_allclose(axis, expected, atol=1e-12)
    assert abs(np.linalg.norm(axis) - 1) < 1e-12


def test_canonical_form_is_half_open():
    closed = OrientationAngles(180, 90)
    canonical = closed.canonical()
    assert canonical.is_canonical()
    assert abs(abs(canonical.axis() @ closed.axis()) - 1) < 1e-12
    assert OrientationAngles(0, 135).canonical() == OrientationAngles(0, 0)


def test_from_axis_inverts_orientation_to_axis():
    for angles in [(30, 40), (90, 0), (120, 170), (45, 90)]:
        o = OrientationAngles(*angles)
        assert OrientationAngles.from_axis(o.axis()) == o
        assert OrientationAngles.from_axis(-o.axis()) == o


def test_orientation_rejects_out_of_range():
    with pytest.raises(SceneError):
        OrientationAngles(-1, 0)
    with pytest.raises(SceneError):
        OrientationAngles(0, 181)


def test_dipole_radius_rule(lam):
    with pytest.raises(SceneError):
        DipoleSpec(Position3(0, 0, 0), OrientationAngles(0, 0), lam / 2, lam / 50, Role.SOURCE)
    DipoleSpec(Position3(0, 0, 0), OrientationAngles(0, 0), lam / 2, lam / 200, Role.SOURCE)


def test_generate_scatterers_table1_constraints(lam):
    scene, _ = preset_scene("Table1Scattering", seed=7)
    assert len(scene.scatterers) == 20

    reader = scene.reader.center
    for s in scene.scatterers:
        assert s.center.distance_to(reader) < 10 * lam
        for dipole in scene.dipoles:
            assert s.center.distance_to(dipole.center) > lam
        assert min(p[2] for p in s.endpoints()) > 0
        assert s.orientation.is_canonical()


def test_generate_scatterers_is_deterministic():
    scene, _ = preset_scene("LosCrossPol")
    assert generate_scatterers(7, 20, scene) == generate_scatterers(7, 20, scene)
    assert generate_scatterers(7, 20, scene) != generate_scatterers(8, 20, scene)


def test_generate_scatterers_zero_count():
    scene, _ = preset_scene("LosCrossPol")
    assert generate_scatterers(7, 0, scene) == []


def test_generate_scatterers_infeasible(lam):
    scene, _ = preset_scene("LosCrossPol")
    with pytest.raises(InfeasibleConstraintsError):
        generate_scatterers(
            7, 5, scene, min_dist_to_dipoles=5 * lam, max_dist_to_reader=lam, attempts=1000
        )


def test_presets():
    table1, pols = preset_scene("Table1Scattering")
    assert table1.reader.center == Position3(100, 0, 0.3)
    assert table1.ground.present and table1.ground.height_z == 0
    assert pols.label == PolarizationLabel.FOUR_PR

    los, _ = preset_scene("los")
    assert los.scatterers == ()
    assert not los.ground.present

    chamber, _ = preset_scene("ExperimentChamber")
    assert chamber.source.center.distance_to(chamber.reader.center) == pytest.approx(0.35)
    assert len(chamber.scatterers) > 0

    with pytest.raises(SceneError):
        preset_scene("nowhere")


def test_scene_separation_rule(los_scene, lam):
    too_close = Position3(0.0, 0.3 * lam, 0.3)
    with pytest.raises(GeometryError):
        los_scene.with_tag(too_close).validate()
    assert los_scene.tag_pose_violation(too_close) is not None
    assert los_scene.tag_pose_violation(Position3(50, 0.3, 0.3)) is None


def test_polarization_sets():
    four = polarization_set("4pr")
    assert len(four) == 4
    assert OrientationAngles(135, 90) in four.orientations

    ipr = polarization_set("ipr")
    assert len(ipr) == 81
    # closed grid: the poles and the theta = 180 column repeat axes
    assert len(ipr.distinct_axes()) == 57
    assert len(four.distinct_axes()) == 4
    assert all(axis.is_canonical() for axis in ipr.distinct_axes())
    assert set(four.orientations) <= set(ipr.orientations)

    assert polarization_set("nr").orientations == (OrientationAngles(45, 90),)
    assert polarization_set("nr-worst").orientations == (OrientationAngles(90, 90),)


def test_polarization_set_invariants():
    with pytest.raises(SceneError):
        PolarizationSet(PolarizationLabel.NR, ())
    with pytest.raises(SceneError):
        custom_polarization_set([OrientationAngles(0, 0), OrientationAngles(0, 0)])

    # same axis, different grid entries
    same_axis = custom_polarization_set([OrientationAngles(0, 0), OrientationAngles(180, 0)])
    assert len(same_axis) == 2 and len(same_axis.distinct_axes()) == 1
    with pytest.raises(SceneError):
        PolarizationSet(PolarizationLabel.FOUR_PR, (OrientationAngles(0, 0),))


def test_configurations():
    assert len(CONFIGURATIONS) == 8
    scene, pols = configuration("LOS-IPR")
    assert len(pols) == 81 and scene.scatterers == ()
    with pytest.raises(SceneError):
        configuration("LOS-8PR")


def test_experiment_grid():
    points = experiment_grid()
    assert len(points) == 29 * 29
    assert points[0] == Position3(0.03, -0.15, 0.0)
    assert points[-1] == Position3(0.31, 0.13, 0.0)
