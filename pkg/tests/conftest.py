from dataclasses import replace

import pytest

from scripts import config
from scripts.analysis.selfcheck import selfcheck_scene
from scripts.models.mom import EnvironmentSolver
from scripts.models.scene import OrientationAngles, Position3, preset_scene


@pytest.fixture(scope="session")
def lam() -> float:
    return config.SPEED_OF_LIGHT / config.DEFAULT_FREQUENCY_HZ


@pytest.fixture(scope="session")
def los_scene():
    scene, _ = preset_scene("LosCrossPol")
    return scene


@pytest.fixture(scope="session")
def copol_scene(los_scene):
    """LosCrossPol with the reader turned vertical like the source."""
    reader = replace(los_scene.reader, orientation=OrientationAngles(0, 0))
    return replace(los_scene, reader=reader)


@pytest.fixture(scope="session")
def desk_scene_small():
    """One-meter link over a ground plane with three scatterers."""
    return selfcheck_scene(seed=7)


@pytest.fixture(scope="session")
def los_solver(los_scene):
    return EnvironmentSolver(los_scene)


@pytest.fixture(scope="session")
def midpoint() -> Position3:
    return Position3(50.0, 0.3, 0.3)
