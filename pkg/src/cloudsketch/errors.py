"""Exception types raised across the package."""


class CloudSketchError(Exception):
    """Base class for all package-specific errors."""


class EmptyCloud(CloudSketchError):
    """An operation required a nonempty point cloud."""


class TooFewPoints(CloudSketchError):
    """Not enough points for the requested neighborhood or fit."""


class EmptyMesh(CloudSketchError):
    """An operation required a mesh with at least one triangle."""


class EmptyTrajectory(CloudSketchError):
    """A scan was requested over a trajectory with no samples."""


class EmptyStroke(CloudSketchError):
    """An eraser was invoked with no stroke samples."""


class NonPositiveDepth(CloudSketchError):
    """Back-projection requires depth > 0."""


class InvalidRotation(CloudSketchError):
    """A quaternion or matrix does not describe a valid rotation."""


class ParseError(CloudSketchError):
    """A file could not be parsed.

    Carries the source path and, when known, the 1-based line number.
    """

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}: "
            if line is not None:
                where = f"{path}:{line}: "
        super().__init__(where + message)


class UnsupportedFormat(ParseError):
    """The file is well-formed but uses an unsupported variant."""


class NonMonotonicTime(ParseError):
    """Trajectory timestamps must be strictly increasing."""


class UnknownTool(ParseError):
    """A session script names a tool that does not exist."""


class InvalidParams(ParseError):
    """A tool invocation's parameters do not match its schema."""


class NoPendingEdit(CloudSketchError):
    """Commit or discard was called without a pending preview."""


class NothingToUndo(CloudSketchError):
    """Undo was called with an empty history."""


class ScriptError(CloudSketchError):
    """A script record failed; the session is left at the last commit."""

    def __init__(self, index, cause):
        self.index = index
        self.cause = cause
        super().__init__(f"script record {index} failed: {cause}")


class DegenerateCorrespondences(CloudSketchError):
    """Fewer than 3 correspondences, or all source points collinear."""


class NoCorrespondences(CloudSketchError):
    """ICP found no point pair within the correspondence distance gate."""


class NoPlaneFound(CloudSketchError):
    """RANSAC could not find a plane with sufficient inlier support."""


class NotAxisAligned(CloudSketchError):
    """A fitted plane is neither horizontal nor vertical within tolerance."""


class MismatchedReport(CloudSketchError):
    """A distance report does not belong to the given cloud."""
