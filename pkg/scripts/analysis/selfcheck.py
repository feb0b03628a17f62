"""Solver property checks run by ``ambsim selfcheck``.

Each check returns a relative error; the suite compares it with its limit
and reports settings that differ from the defaults as configuration rather
than as failures.
"""

from dataclasses import replace

import numpy as np
import pandas as pd

from scripts.config import SolverSettings
from scripts.logger import logger
from scripts.models.mom import (
    SolveContext,
    apply_loads,
    excite_and_solve,
    fill_impedance_matrix,
    mesh_scene,
    port_reading,
    solve,
    switch_tag_state,
    tag_state_load,
)
from scripts.models.scene import Scene, TagState, desk_scene

LIMITS: dict = {
    "symmetry": 1e-10,
    "reciprocity": 1e-8,
    "rank_one_update": 1e-8,
    "image_equivalence": 1e-6,
    "mesh_refinement": 0.05,
}


def selfcheck_scene(seed: int = 7) -> Scene:
    """Desk-sized scene with a ground plane, three scatterers and the tag posed."""
    return desk_scene(seed=seed, reader_x=1.0, count=3)


def _loaded_context(scene: Scene, settings: SolverSettings, fold_images: bool = True):
    mesh = mesh_scene(scene, settings.segments_per_halfwave, wire_radius=settings.wire_radius)
    ctx = fill_impedance_matrix(mesh, settings=settings, fold_images=fold_images)
    return mesh, ctx


def _relative(a, b) -> float:
    scale = max(float(np.linalg.norm(b)), np.finfo(float).tiny)
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)) / scale)


def symmetry_error(ctx: SolveContext) -> float:
    return ctx.asymmetry()


def reciprocity_error(ctx: SolveContext) -> float:
    """Source-to-reader against reader-to-source transfer current."""
    mesh = ctx.mesh
    forward = excite_and_solve(ctx, mesh.source_port)[mesh.reader_port]
    backward = excite_and_solve(ctx, mesh.reader_port)[mesh.source_port]

    return _relative(forward, backward)


def rank_one_error(ctx: SolveContext, open_circuit_ohms: float) -> float:
    """Rank-one switch to the open tag against a fresh solve of the switched system."""
    mesh = ctx.mesh
    delta = tag_state_load(TagState.OFF, open_circuit_ohms)
    on = excite_and_solve(ctx, mesh.source_port)
    updated = switch_tag_state(ctx, mesh.tag_port, delta, on)
    direct = excite_and_solve(apply_loads(ctx, {mesh.tag_port: delta}), mesh.source_port)

    return _relative(updated, direct)


def image_error(scene: Scene, settings: SolverSettings) -> float:
    """Folded ground plane against explicit image unknowns driven in antiphase."""
    mesh, folded = _loaded_context(scene, settings)
    folded = apply_loads(folded, mesh.load_table)
    _, explicit = _loaded_context(scene, settings, fold_images=False)

    loads = dict(mesh.load_table)
    loads.update({mesh.image_index(k): z for k, z in mesh.load_table.items()})
    explicit = apply_loads(explicit, loads)

    reference = excite_and_solve(folded, mesh.source_port)
    mirrored = solve(explicit, {mesh.source_port: 1.0, mesh.image_index(mesh.source_port): -1.0})

    return _relative(mirrored[: mesh.n_real], reference)


def loaded_system(scene: Scene, settings: SolverSettings):
    """Loaded system of ``scene`` with its tag posed and the source-driven currents."""
    mesh, ctx = _loaded_context(scene, settings)
    ctx = apply_loads(ctx, mesh.load_table)

    return ctx, excite_and_solve(ctx, mesh.source_port)


def refinement_drift(scene: Scene, settings: SolverSettings, fine: int = 21) -> float:
    """Change of the reader-to-source power ratio from the default mesh to ``fine``.

    Reader power is taken relative to the delivered source power: the feed
    impedance moves with the mesh, and that factor cancels once SNR is
    calibrated to the transmitted power.
    """
    ratios = []
    for segments in (settings.segments_per_halfwave, fine):
        mesh, ctx = _loaded_context(scene, replace(settings, segments_per_halfwave=segments))
        ctx = apply_loads(ctx, mesh.load_table)
        currents = excite_and_solve(ctx, mesh.source_port)
        p_source = 0.5 * np.real(np.conj(currents[mesh.source_port]))
        ratios.append(port_reading(ctx, currents, mesh.reader_port).power_w / p_source)

    return abs(ratios[1] - ratios[0]) / abs(ratios[1])


def run_selfcheck(
    settings: SolverSettings | None = None, scene: Scene | None = None, seed: int = 7
) -> pd.DataFrame:
    """Run every check and return one row per check or changed setting.

    Returns:
        pd.DataFrame: columns check, value, limit, status where status is
        pass, fail or config.

    """
    settings = settings or SolverSettings()
    scene = scene or selfcheck_scene(seed)

    mesh, ctx = _loaded_context(scene, settings)
    loaded = apply_loads(ctx, mesh.load_table)

    values = {
        "symmetry": symmetry_error(ctx),
        "reciprocity": reciprocity_error(loaded),
        "rank_one_update": rank_one_error(loaded, settings.open_circuit_ohms),
        "mesh_refinement": refinement_drift(scene, settings),
    }
    if scene.ground.present:
        values["image_equivalence"] = image_error(scene, settings)

    rows = [
        {
            "check": name,
            "value": value,
            "limit": LIMITS[name],
            "status": "pass" if value < LIMITS[name] else "fail",
        }
        for name, value in values.items()
    ]

    defaults = SolverSettings().as_dict()
    for key, value in settings.as_dict().items():
        if value != defaults[key]:
            rows.append({"check": key, "value": value, "limit": defaults[key], "status": "config"})

    report = pd.DataFrame(rows, columns=["check", "value", "limit", "status"])
    for row in report.loc[lambda d: d.status == "fail"].itertuples():
        logger.warning(f"Self-check {row.check} failed: {row.value:.3g} >= {row.limit:.3g}")

    return report
