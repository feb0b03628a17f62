"""Projection model of the source-tag-reader polarization chain.

The direct link scales with S.R and the backscatter link with (S.T)(T.R),
where S, T and R are the unit axes of the source, tag and reader dipoles.
For a vertical source the tag maximizing |(S.T)(T.R)| shares the reader's
azimuth and sits at half its tilt.
"""

from dataclasses import dataclass, replace

import numpy as np
import pandas as pd

from scripts.config import SolverSettings
from scripts.errors import UnsupportedPreconditionError
from scripts.logger import logger
from scripts.models.mom import EnvironmentSolver
from scripts.models.scene import (
    OrientationAngles,
    Position3,
    Scene,
    orientation_to_axis,
)

# objectives closer than this count as a tie
OBJECTIVE_TIE: float = 1e-9


@dataclass(frozen=True)
class ProjectionModel:
    s_axis: np.ndarray
    r_axis: np.ndarray

    def __post_init__(self):
        for name in ("s_axis", "r_axis"):
            axis = np.asarray(getattr(self, name), dtype=float)
            if abs(np.linalg.norm(axis) - 1) > 1e-12:
                raise ValueError(f"{name} must be a unit vector")
            object.__setattr__(self, name, axis)

    @classmethod
    def from_orientations(
        cls, source: OrientationAngles, reader: OrientationAngles
    ) -> "ProjectionModel":
        return cls(orientation_to_axis(source), orientation_to_axis(reader))


def direct_projection(model: ProjectionModel) -> float:
    return float(model.s_axis @ model.r_axis)


def backscatter_projection(model: ProjectionModel, t_axis) -> float:
    t_axis = np.asarray(t_axis, dtype=float)
    if abs(np.linalg.norm(t_axis) - 1) > 1e-12:
        raise ValueError("t_axis must be a unit vector")

    return float((model.s_axis @ t_axis) * (t_axis @ model.r_axis))


def opssa_closed_form(
    source: OrientationAngles,
    reader: OrientationAngles,
    diagnostics: dict | None = None,
) -> OrientationAngles:
    """Optimal tag orientation for a vertical source: (phi_R / 2, theta_R).

    The tag tilted a further 90 degrees is also stationary; when its objective
    ties with the returned one, ``diagnostics["tie"]`` is set and a warning
    logged.

    Args:
        source (OrientationAngles): Source orientation; must be vertical.
        reader (OrientationAngles): Reader orientation.
        diagnostics (dict): Optional dict receiving the tie flag and objectives.

    Returns:
        OrientationAngles: the principal-branch tag orientation.

    """
    if not np.allclose(orientation_to_axis(source), [0, 0, 1], atol=1e-12):
        raise UnsupportedPreconditionError(
            "Closed-form tag orientation needs a vertical source (phi_S = 0); "
            "use the exhaustive search instead"
        )

    tag = OrientationAngles(reader.phi_deg / 2, reader.theta_deg)
    shifted = OrientationAngles(reader.phi_deg / 2 + 90, reader.theta_deg)

    model = ProjectionModel.from_orientations(source, reader)
    principal = abs(backscatter_projection(model, orientation_to_axis(tag)))
    other = abs(backscatter_projection(model, orientation_to_axis(shifted)))
    tie = abs(principal - other) <= OBJECTIVE_TIE

    if tie:
        logger.warning(
            f"Reader {reader.as_tuple()}: tag {tag.as_tuple()} ties with "
            f"{shifted.as_tuple()} (objective {principal:.6g})"
        )
    if diagnostics is not None:
        diagnostics.update(tie=tie, objective=principal, shifted_objective=other)

    return tag


def opssa_exhaustive(
    model: ProjectionModel, phi_grid, theta_grid
) -> tuple[OrientationAngles, float]:
    """Grid point maximizing |(S.T)(T.R)|; ties go to the lowest (phi, theta) index."""
    phi = np.radians(np.asarray(phi_grid, dtype=float))
    theta = np.radians(np.asarray(theta_grid, dtype=float))
    if phi.size == 0 or theta.size == 0:
        raise ValueError("Orientation grids must not be empty")

    axes = np.stack(
        [
            np.sin(phi)[:, None] * np.cos(theta)[None, :],
            np.sin(phi)[:, None] * np.sin(theta)[None, :],
            np.broadcast_to(np.cos(phi)[:, None], (phi.size, theta.size)),
        ],
        axis=-1,
    )
    objective = np.abs((axes @ model.s_axis) * (axes @ model.r_axis))

    best = objective.max()
    flat = int(np.flatnonzero(objective.ravel() >= best - OBJECTIVE_TIE)[0])
    i, j = np.unravel_index(flat, objective.shape)

    return (
        OrientationAngles(float(np.asarray(phi_grid)[i]), float(np.asarray(theta_grid)[j])),
        float(objective[i, j]),
    )


def orientation_match(a: OrientationAngles, b: OrientationAngles) -> float:
    """|axis(a) . axis(b)|, clipped to [0, 1]."""
    return float(min(1.0, abs(orientation_to_axis(a) @ orientation_to_axis(b))))


def opssa_match_table(
    phi_values,
    theta_values,
    tag_step_deg: float = 1.0,
    source: OrientationAngles = OrientationAngles(0, 0),
    closed_form: bool = True,
) -> pd.DataFrame:
    """Closed form against exhaustive search for every reader orientation.

    Without ``closed_form`` only the exhaustive columns are filled, which is
    the only option for a non-vertical source.

    Args:
        phi_values: Reader tilts (degrees).
        theta_values: Reader azimuths (degrees).
        tag_step_deg (float): Step of the exhaustive tag grid, which covers
            every axis once (phi and theta in [0, 180)).
        source (OrientationAngles): Source orientation.
        closed_form (bool): Evaluate the closed form as well.

    Returns:
        pd.DataFrame: one row per reader orientation.

    """
    phi_grid = np.arange(0, 180, tag_step_deg)
    theta_grid = np.arange(0, 180, tag_step_deg)

    rows = []
    for phi_r in phi_values:
        for theta_r in theta_values:
            reader = OrientationAngles(float(phi_r), float(theta_r))
            model = ProjectionModel.from_orientations(source, reader)
            found, objective = opssa_exhaustive(model, phi_grid, theta_grid)
            row = {
                "reader_phi_deg": reader.phi_deg,
                "reader_theta_deg": reader.theta_deg,
                "closed_phi_deg": np.nan,
                "closed_theta_deg": np.nan,
                "exhaustive_phi_deg": found.phi_deg,
                "exhaustive_theta_deg": found.theta_deg,
                "closed_objective": np.nan,
                "exhaustive_objective": objective,
                "match": np.nan,
                "tie": False,
            }
            if closed_form:
                diagnostics = {}
                closed = opssa_closed_form(source, reader, diagnostics)
                row.update(
                    closed_phi_deg=closed.phi_deg,
                    closed_theta_deg=closed.theta_deg,
                    closed_objective=diagnostics["objective"],
                    match=orientation_match(closed, found),
                    tie=diagnostics["tie"],
                )
            rows.append(row)

    return pd.DataFrame(rows)


def mom_best_orientation(
    scene: Scene,
    tag_center: Position3,
    phi_grid,
    theta_grid,
    settings: SolverSettings | None = None,
    solver: EnvironmentSolver | None = None,
) -> tuple[OrientationAngles, float]:
    """Tag orientation maximizing |P_on - P_off| at ``tag_center``, by the solver.

    Grid points sharing an axis are solved once. Ties within a relative
    1e-9 go to the lowest (phi, theta) index.

    Returns:
        tuple[OrientationAngles, float]: best orientation and its power difference (W).

    """
    solver = solver or EnvironmentSolver(scene, settings)

    seen: dict = {}
    candidates = []
    for phi in phi_grid:
        for theta in theta_grid:
            orientation = OrientationAngles(float(phi), float(theta))
            axis = orientation.canonical()
            if axis not in seen:
                p_on, p_off = solver.transfer(tag_center, axis)
                seen[axis] = abs(p_on - p_off)
            candidates.append((orientation, seen[axis]))

    values = np.array([value for _, value in candidates])
    best = values.max()
    index = int(np.flatnonzero(values >= best * (1 - OBJECTIVE_TIE))[0])
    logger.debug(f"Solver-best tag orientation {candidates[index][0].as_tuple()}")

    return candidates[index]


def mom_match_table(
    scene: Scene,
    tag_center: Position3,
    reader_orientations,
    tag_step_deg: float = 5.0,
    settings: SolverSettings | None = None,
) -> pd.DataFrame:
    """Solver-best tag orientation against the closed form, per reader orientation.

    The scene's reader is re-oriented for each row; the source must be
    vertical. The tag grid covers every axis once at ``tag_step_deg``.
    """
    grid = np.arange(0, 180, tag_step_deg)

    rows = []
    for reader in reader_orientations:
        posed = replace(scene, reader=replace(scene.reader, orientation=reader))
        closed = opssa_closed_form(scene.source.orientation, reader)
        best, delta_p = mom_best_orientation(posed, tag_center, grid, grid, settings)
        rows.append(
            {
                "reader_phi_deg": reader.phi_deg,
                "reader_theta_deg": reader.theta_deg,
                "closed_phi_deg": closed.phi_deg,
                "closed_theta_deg": closed.theta_deg,
                "mom_phi_deg": best.phi_deg,
                "mom_theta_deg": best.theta_deg,
                "mom_delta_power_w": delta_p,
                "match": orientation_match(closed, best),
            }
        )
        logger.info(
            f"Reader {reader.as_tuple()}: solver {best.as_tuple()}, "
            f"closed form {closed.as_tuple()}"
        )

    return pd.DataFrame(rows)
