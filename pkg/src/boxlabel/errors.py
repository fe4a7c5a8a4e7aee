"""Exception types shared across the toolkit."""


class BoxlabelError(Exception):
    """Base class for all toolkit errors."""


class InvalidPose(BoxlabelError):
    """Rotation block is not orthonormal (or not right-handed) beyond tolerance."""


class InvalidSize(BoxlabelError):
    """Box size has a non-positive component."""


class ParseError(BoxlabelError):
    """A project file is malformed or violates its schema."""


class DuplicateId(BoxlabelError):
    """Two entries in one set share an id."""


class DegenerateDepth(BoxlabelError):
    """Point at or behind the camera plane (z <= 0); clip before projecting."""


class NoMarkersVisible(BoxlabelError):
    """Tip estimation called with zero marker observations."""


class InconsistentObservations(BoxlabelError):
    """Per-marker tip positions disagree beyond the spread threshold."""


class DegenerateEdge(BoxlabelError):
    """Two consecutive pen points are (nearly) coincident."""


class CollinearPoints(BoxlabelError):
    """The two horizontal pen strokes are (nearly) parallel."""


class UnknownFormat(BoxlabelError):
    """Unsupported dataset output format."""


class TooFewViews(BoxlabelError):
    """Silhouette carving needs masks on at least two distinct frames."""


class EmptyHull(BoxlabelError):
    """The silhouette frustums do not intersect inside the working volume."""


# hull_to_instance raises the same condition under this alias
EmptyHullError = EmptyHull


class CoincidentPosition(BoxlabelError):
    """Camera center coincides with the object origin; polar angles undefined."""


class NoGroundTruth(BoxlabelError):
    """Metric that needs at least one ground-truth box got none."""


class FrameMismatch(BoxlabelError):
    """Two annotation sets do not cover the same frame ids."""


class NotFound(BoxlabelError):
    """Requested frame or instance id does not exist."""


class RevisionConflict(BoxlabelError):
    """Edit was based on a stale project revision."""
