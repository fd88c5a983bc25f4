"""Exception types shared across the package."""


class SceneMassError(Exception):
    """Base class for every error raised by this package."""


# --- mesh parsing and geometry ---------------------------------------------


class MeshParseError(SceneMassError):
    """A mesh source could not be parsed; carries the offending line number."""

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class MalformedLine(MeshParseError):
    pass


class NonTriangleFace(MeshParseError):
    pass


class IndexOutOfRange(MeshParseError):
    pass


class DegenerateTriangle(MeshParseError):
    pass


class EmptyMesh(MeshParseError):
    pass


class NonPositiveScale(SceneMassError):
    pass


class NotWatertight(SceneMassError):
    """Volume was requested for a mesh that fails the closed-surface check."""

    def __init__(self, mesh_id: str, report):
        super().__init__(
            f"mesh '{mesh_id}' is not watertight: "
            f"{len(report.open_edges)} open edge(s), "
            f"{len(report.inconsistent_edges)} inconsistent edge(s)"
        )
        self.mesh_id = mesh_id
        self.report = report


# --- detection --------------------------------------------------------------


class InvalidCell(SceneMassError):
    pass


class InvalidAnchor(SceneMassError):
    pass


class NonPositiveArea(SceneMassError):
    pass


class SchemaError(SceneMassError):
    """A structured input (JSON/CSV) violates its documented schema."""


class UnknownClass(SceneMassError):
    pass


class EmptyCrop(SceneMassError):
    pass


# --- material model ---------------------------------------------------------


class BadDimensions(SceneMassError):
    pass


class TooFewVectors(SceneMassError):
    pass


class InvalidK(SceneMassError):
    pass


class DimensionMismatch(SceneMassError):
    pass


class EmptyClass(SceneMassError):
    pass


class UntrainedModel(SceneMassError):
    pass


# --- density ----------------------------------------------------------------


class UnknownMaterial(SceneMassError):
    pass


class EmptyProfile(SceneMassError):
    pass


class NonPositiveLiterary(SceneMassError):
    pass


class EmptyDistribution(SceneMassError):
    pass


# --- pipeline and I/O -------------------------------------------------------


class UnregisteredClass(SceneMassError):
    pass


class NonPositiveInput(SceneMassError):
    pass


class ConfigError(SceneMassError):
    pass


class PpmError(SceneMassError):
    pass
