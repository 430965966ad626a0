"""Exception types shared across the package."""


class FaceWarpError(Exception):
    """Base class for all package-specific failures."""


class LandmarkParseError(FaceWarpError):
    """Landmark sidecar text violates the expected format."""


class DegenerateGeometryError(FaceWarpError):
    """Point configuration too degenerate to work with (coincident,
    collinear, or singular)."""


class OutOfFrameError(FaceWarpError):
    """Landmarks fall too far outside the image rectangle to mesh safely."""


class BudgetExhaustedError(FaceWarpError):
    """An oracle query was requested after the query budget was spent."""


class OracleTransportError(FaceWarpError):
    """A remote oracle call failed after the query was already charged."""


class GalleryError(FaceWarpError):
    """Gallery construction or lookup failure."""


class CorpusError(FaceWarpError):
    """Corpus ingestion failure."""
