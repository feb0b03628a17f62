from dataclasses import dataclass, asdict
from pathlib import Path


class Paths:
    """Class to store the paths to the scene files and output folders."""

    project = Path(__file__).resolve().parent.parent
    raw_data = project / "raw_data"
    output = project / "output"
    scripts = project / "scripts"
    models = scripts / "models"


TOOL_VERSION: str = "1.0.0"
SCHEMA_VERSION: int = 1

# Physics
SPEED_OF_LIGHT: float = 299_792_458.0
MU_0: float = 4e-7 * 3.141592653589793
EPSILON_0: float = 1.0 / (MU_0 * SPEED_OF_LIGHT**2)
DEFAULT_FREQUENCY_HZ: float = 2.4e9

# Solver defaults
SEGMENTS_PER_HALFWAVE: int = 11
WIRE_RADIUS_WAVELENGTHS: float = 1e-3
OPEN_CIRCUIT_OHMS: float = 1e6
READER_LOAD_OHMS: float = 50.0
CONDITION_LIMIT: float = 1e12
SHERMAN_MORRISON_MIN_DENOMINATOR: float = 1e-14
QUADRATURE_ORDER: int = 4
SELF_TERM_RTOL: float = 1e-12
FILL_BLOCK_ROWS: int = 256

# Scene defaults
MIN_DIPOLE_SEPARATION_WAVELENGTHS: float = 0.5
MAX_RADIUS_FRACTION: float = 1 / 50
SCATTERER_ATTEMPTS: int = 100_000
PANEL_PITCH_WAVELENGTHS: float = 0.1

# Metrics defaults (Table I)
P_NOISE_W: float = 1.0
DELTA_SNR_TARGET_DB: float = 3.4
BER_TARGET: float = 1e-2

# Sweep defaults
MAP_CELLS: int = 40
MAP_WINDOW_WAVELENGTHS: float = 6.0
COVERAGE_STEP_M: float = 0.005
FINE_COVERAGE_STEP_M: float = 0.001
COVERAGE_RADII_WAVELENGTHS: tuple = (0.5, 3.0)
NR_PAIR_VIOLATION_MASS: float = 0.02
SWEEP_CHUNK_POSES: int = 64
MIN_COVERAGE_POSITIONS: int = 8
MAP_SNR_TX_DB: float = 110.0
SNR_TX_RANGE: str = "80:130:5"
MAP_DB_RANGE: str = "-40:20:10"


@dataclass(frozen=True)
class SolverSettings:
    """Numerical knobs of the thin-wire solver, recorded in every manifest.

    ``wire_radius`` is in meters; ``None`` means λ·WIRE_RADIUS_WAVELENGTHS.
    """

    segments_per_halfwave: int = SEGMENTS_PER_HALFWAVE
    wire_radius: float | None = None
    open_circuit_ohms: float = OPEN_CIRCUIT_OHMS
    quadrature_order: int = QUADRATURE_ORDER
    condition_limit: float = CONDITION_LIMIT

    def radius_for(self, wavelength: float) -> float:
        if self.wire_radius is not None:
            return self.wire_radius
        return wavelength * WIRE_RADIUS_WAVELENGTHS

    def as_dict(self) -> dict:
        return asdict(self)
