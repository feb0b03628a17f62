"""Exceptions raised by the simulator."""


class AmbientBackscatterError(Exception):
    """Base class for all errors raised by this package."""


class SceneError(AmbientBackscatterError, ValueError):
    """A scene violates one of its geometric invariants."""


class InfeasibleConstraintsError(SceneError):
    """Scatterer placement ran out of attempts."""


class GeometryError(SceneError):
    """Wires overlap, cross the ground plane or sit too close together."""


class SchemaError(SceneError):
    """A scene file could not be parsed or does not follow the schema."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class MeshError(AmbientBackscatterError, ValueError):
    """Invalid segmentation parameters."""


class NumericalError(AmbientBackscatterError, RuntimeError):
    """The linear system is singular or too badly conditioned to trust."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)


class UnsupportedPreconditionError(AmbientBackscatterError, ValueError):
    """The closed-form optimum was requested outside its validity domain."""
