import numpy as np
import pytest

from scripts import config
from scripts.analysis.selfcheck import (
    LIMITS,
    image_error,
    rank_one_error,
    reciprocity_error,
    refinement_drift,
    selfcheck_scene,
)
from scripts.config import SolverSettings
from scripts.errors import GeometryError, MeshError, NumericalError
from scripts.models.mom import (
    EnvironmentSolver,
    Wire,
    WireSet,
    apply_loads,
    check_overlaps,
    excite_and_solve,
    factorize,
    fill_impedance_matrix,
    impedance_block,
    input_impedance,
    mesh_scene,
    port_reading,
    switch_tag_state,
    tag_state_load,
    tag_transfer,
)
from scripts.models.scene import OrientationAngles, Position3, TagState, preset_scene

NR_BEST = OrientationAngles(45, 90)


@pytest.fixture(scope="module")
def los_context(los_scene):
    mesh = mesh_scene(los_scene.with_tag(Position3(50, 0.3, 0.3), NR_BEST))
    ctx = fill_impedance_matrix(mesh)
    return mesh, ctx, apply_loads(ctx, mesh.load_table)


def _dipole_wire(lam, center=(0.0, 0.0, 0.0), pulses=11):
    c = np.asarray(center, float)
    half = np.array([0.0, 0.0, lam / 4])
    return Wire("d", c - half, c + half, lam / 1000, pulses)


def test_mesh_counts(los_scene):
    mesh = mesh_scene(los_scene)
    assert mesh.n_segments == 33
    assert len(set(mesh.ports().values())) == 3

    table1, _ = preset_scene("Table1Scattering")
    mesh = mesh_scene(table1)
    assert mesh.n_real == 23 * 11
    assert mesh.n_segments == 2 * 23 * 11


def test_mesh_rejects_bad_segment_counts(los_scene):
    for segments in (10, 3):
        with pytest.raises(MeshError):
            mesh_scene(los_scene, segments)


def test_segments_respect_meshing_rule(lam):
    scene, _ = preset_scene("Table1Scattering")
    mesh = mesh_scene(scene)
    segments = mesh.segments

    assert all(0 < s.length <= lam / 10 for s in segments)

    real, image = segments[: mesh.n_real], segments[mesh.n_real :]
    assert all(i.image and not r.image for r, i in zip(real, image))
    assert image[0].start.z == pytest.approx(-real[0].start.z)
    assert image[0].start.x == pytest.approx(real[0].start.x)


def test_impedance_matrix_symmetry(los_context):
    _, ctx, _ = los_context
    assert ctx.asymmetry() < 1e-10

    table1, _ = preset_scene("Table1Scattering")
    assert fill_impedance_matrix(mesh_scene(table1)).asymmetry() < 1e-10


def test_isolated_dipole_impedance(lam):
    wires = WireSet.build([_dipole_wire(lam)])
    z = impedance_block(wires, wires, config.DEFAULT_FREQUENCY_HZ, same=True)

    rhs = np.zeros(11, dtype=complex)
    rhs[5] = 1.0
    z_in = 1 / np.linalg.solve(z, rhs)[5]

    assert 50 <= z_in.real <= 110
    assert 0 <= z_in.imag <= 100


def test_far_mutual_impedance_is_small(lam):
    near = _dipole_wire(lam)
    far = _dipole_wire(lam, center=(10 * lam, 0.0, 0.0))
    wires = WireSet.build([near, far])
    z = impedance_block(wires, wires, config.DEFAULT_FREQUENCY_HZ, same=True)

    assert abs(z[5, 16]) < 0.01 * abs(z[5, 5])


def test_overlapping_wires_are_rejected(lam):
    crossing = Wire("x", np.array([-lam / 4, 0, 0]), np.array([lam / 4, 0, 0]), lam / 1000, 11)
    with pytest.raises(GeometryError):
        check_overlaps([_dipole_wire(lam), crossing])


def test_apply_loads(los_context):
    mesh, ctx, _ = los_context
    reader = mesh.reader_port

    loaded = apply_loads(ctx, {reader: 50.0})
    diff = loaded.loaded_matrix - ctx.loaded_matrix
    assert diff[reader, reader] == pytest.approx(50.0)
    diff[reader, reader] = 0
    assert not diff.any()

    on = apply_loads(ctx, {mesh.tag_port: tag_state_load(TagState.ON)})
    assert np.array_equal(on.loaded_matrix, ctx.loaded_matrix)
    assert tag_state_load(TagState.OFF) == config.OPEN_CIRCUIT_OHMS

    with pytest.raises(MeshError):
        apply_loads(ctx, {ctx.size: 50.0})


def test_loads_on_image_segments_are_rejected(desk_scene_small):
    mesh = mesh_scene(desk_scene_small)
    ctx = fill_impedance_matrix(mesh)
    image = mesh.image_index(mesh.reader_port)
    assert mesh.image_flag.sum() == mesh.n_real
    assert mesh.image_flag[image] and not mesh.image_flag[mesh.reader_port]

    with pytest.raises(MeshError, match="image segment"):
        apply_loads(ctx, {image: 50.0})


def test_excitation_linearity(los_context):
    mesh, _, loaded = los_context
    assert not excite_and_solve(loaded, mesh.source_port, 0.0).any()

    unit = excite_and_solve(loaded, mesh.source_port)
    scaled = excite_and_solve(loaded, mesh.source_port, 2.5 - 1j)
    np.testing.assert_allclose(scaled, (2.5 - 1j) * unit, rtol=1e-12)


def test_reciprocity(los_context, desk_scene_small):
    _, _, loaded = los_context
    assert reciprocity_error(loaded) < 1e-8

    mesh = mesh_scene(desk_scene_small)
    ctx = apply_loads(fill_impedance_matrix(mesh), mesh.load_table)
    assert reciprocity_error(ctx) < 1e-8


def test_port_reading_power(los_context):
    mesh, _, loaded = los_context
    currents = excite_and_solve(loaded, mesh.source_port)
    reading = port_reading(loaded, currents, mesh.reader_port)

    assert reading.power_w == pytest.approx(0.5 * abs(reading.current) ** 2 * 50.0)
    assert reading.voltage == pytest.approx(reading.current * 50.0)


def test_input_impedance_is_inverse_current(los_context):
    mesh, _, loaded = los_context
    currents = excite_and_solve(loaded, mesh.source_port)
    expected = 1 / currents[mesh.source_port]
    assert input_impedance(loaded, mesh.source_port) == pytest.approx(expected)


def test_switch_tag_state(los_context):
    mesh, _, loaded = los_context
    tag = mesh.tag_port
    z_open = tag_state_load(TagState.OFF)
    on = excite_and_solve(loaded, mesh.source_port)

    assert np.array_equal(switch_tag_state(loaded, tag, 0, on), on)

    off = switch_tag_state(loaded, tag, z_open, on)
    off_ctx = apply_loads(loaded, {tag: z_open})
    full = excite_and_solve(off_ctx, mesh.source_port)
    assert np.linalg.norm(off - full) / np.linalg.norm(full) < 1e-8

    back = switch_tag_state(off_ctx, tag, -z_open, off)
    assert np.linalg.norm(back - on) / np.linalg.norm(on) < 1e-8


def test_switch_tag_state_falls_back_to_full_solve(los_context, monkeypatch):
    mesh, _, loaded = los_context
    monkeypatch.setattr(config, "SHERMAN_MORRISON_MIN_DENOMINATOR", 1e30)

    on = excite_and_solve(loaded, mesh.source_port)
    diagnostics = {}
    off = switch_tag_state(loaded, mesh.tag_port, 1e6, on, diagnostics)
    full = excite_and_solve(apply_loads(loaded, {mesh.tag_port: 1e6}), mesh.source_port)

    assert diagnostics["fallback"]
    assert np.linalg.norm(off - full) / np.linalg.norm(full) < 1e-8


def test_ill_conditioned_matrix_raises():
    with pytest.raises(NumericalError) as excinfo:
        factorize(np.diag([1.0, 1e-14]).astype(complex))
    assert excinfo.value.diagnostics["condition_estimate"] > 1e12


def test_rank_one_on_desk_scene(desk_scene_small):
    mesh = mesh_scene(desk_scene_small)
    ctx = apply_loads(fill_impedance_matrix(mesh), mesh.load_table)
    assert rank_one_error(ctx, config.OPEN_CIRCUIT_OHMS) < 1e-8


def test_image_equivalence(desk_scene_small):
    assert image_error(desk_scene_small, SolverSettings()) < 1e-6


def test_unfolded_system_doubles_unknowns(desk_scene_small):
    mesh = mesh_scene(desk_scene_small)
    ctx = fill_impedance_matrix(mesh, fold_images=False)
    assert ctx.size == 2 * mesh.n_real
    assert not ctx.folded


def test_mesh_refinement_is_stable(los_scene):
    # cross-polarized link as shipped, tag posed at the midpoint
    assert los_scene.reader.orientation == OrientationAngles(90, 90)
    assert los_scene.source.orientation == OrientationAngles(0, 0)
    assert refinement_drift(los_scene, SolverSettings()) < LIMITS["mesh_refinement"]


def test_tag_transfer_detectable_and_positive(los_scene, midpoint):
    p_on, p_off = tag_transfer(los_scene, (midpoint, NR_BEST))
    assert p_on >= 0 and p_off >= 0
    assert p_on != p_off


def test_far_open_tag_leaves_direct_link_untouched(copol_scene, lam):
    solver = EnvironmentSolver(copol_scene)
    _, p_off = solver.transfer(Position3(50, 50 * lam, 0.3), OrientationAngles(0, 0))
    direct = solver.reference_reader_power()

    assert abs(p_off - direct) / direct < 0.01


def test_tag_pose_rules_are_enforced(los_scene, los_solver):
    pose = (Position3(0.01, 0.0, 0.3), NR_BEST)
    with pytest.raises(GeometryError):
        tag_transfer(los_scene, pose)
    with pytest.raises(GeometryError):
        los_solver.transfer(*pose)


def test_environment_solver_matches_full_solve(los_scene, los_solver):
    for orientation in (NR_BEST, OrientationAngles(90, 90), OrientationAngles(0, 0)):
        center = Position3(50, 0.3, 0.3)
        full = tag_transfer(los_scene, (center, orientation))
        fast = los_solver.transfer(center, orientation)
        np.testing.assert_allclose(fast, full, rtol=1e-6)


def _free_pose(scene, orientation):
    for x in np.arange(0.3, 0.8, 0.05):
        for y in (0.4, -0.4, 0.6, -0.6):
            center = Position3(float(x), y, 0.3)
            if scene.tag_pose_violation(center, orientation) is None:
                return center
    raise AssertionError("no free tag pose")


def test_environment_solver_over_ground(desk_scene_small):
    solver = EnvironmentSolver(desk_scene_small)
    center = _free_pose(desk_scene_small, NR_BEST)
    full = tag_transfer(desk_scene_small, (center, NR_BEST))
    fast = solver.transfer(center, NR_BEST)
    np.testing.assert_allclose(fast, full, rtol=1e-4)


def test_batch_equals_single_poses(los_solver):
    centers = [Position3(50, 0.3 + 0.01 * i, 0.3) for i in range(5)]
    p_on, p_off = los_solver.transfer_batch(centers, NR_BEST)

    for k, center in enumerate(centers):
        single = los_solver.transfer(center, NR_BEST)
        np.testing.assert_allclose(single, (p_on[k], p_off[k]), rtol=1e-10)


def test_open_load_insensitive_above_1e5(los_scene, midpoint):
    deltas = []
    for ohms in (1e5, 1e6, 1e7):
        p_on, p_off = tag_transfer(
            los_scene, (midpoint, NR_BEST), SolverSettings(open_circuit_ohms=ohms)
        )
        deltas.append(p_on - p_off)

    assert abs(deltas[0] - deltas[2]) / abs(deltas[2]) < 1e-2
    assert abs(deltas[1] - deltas[2]) / abs(deltas[2]) < 1e-2


@pytest.mark.slow
def test_rank_one_update_over_random_scenes():
    for seed in range(100):
        scene = selfcheck_scene(seed)
        mesh = mesh_scene(scene)
        ctx = apply_loads(fill_impedance_matrix(mesh), mesh.load_table)
        assert rank_one_error(ctx, config.OPEN_CIRCUIT_OHMS) < 1e-8, seed


def test_cross_polarized_reader_sees_no_direct_link(los_scene, copol_scene):
    cross = EnvironmentSolver(los_scene).reference_reader_power()
    co = EnvironmentSolver(copol_scene).reference_reader_power()
    assert cross < 1e-6 * co
