"""Landmark-driven face warping and query-budgeted black-box attacks on
face identification."""

__version__ = "0.1.0"

from .attack import (
    AttackConfig,
    AttackOutcome,
    complexity_bound,
    is_dodge,
    is_impersonation,
    l2_distance,
    run_attack,
    schedule,
)
from .images import Image, load_image, save_image
from .landmarks import (
    DEFAULT_REFERENCE,
    AffineTransform,
    FivePointSet,
    LandmarkSet,
    ReferenceSpace,
    apply_affine,
    estimate_affine,
    invert_affine,
    parse_landmarks,
    reference_points,
    serialize_landmarks,
    to_reference,
)
from .oracle import (
    Gallery,
    LocalOracle,
    OracleResponse,
    QueryLedger,
    RemoteOracle,
    enroll,
    extract_embedding,
    identify,
    load_gallery,
    match,
)
from .warp import WarpFunction, WarpSpec, build_warp_mesh, displace_landmarks, warp_face, warp_image

__all__ = [
    "AffineTransform",
    "AttackConfig",
    "AttackOutcome",
    "DEFAULT_REFERENCE",
    "FivePointSet",
    "Gallery",
    "Image",
    "LandmarkSet",
    "LocalOracle",
    "OracleResponse",
    "QueryLedger",
    "ReferenceSpace",
    "RemoteOracle",
    "WarpFunction",
    "WarpSpec",
    "apply_affine",
    "build_warp_mesh",
    "complexity_bound",
    "displace_landmarks",
    "enroll",
    "estimate_affine",
    "extract_embedding",
    "identify",
    "invert_affine",
    "is_dodge",
    "is_impersonation",
    "l2_distance",
    "load_gallery",
    "load_image",
    "match",
    "parse_landmarks",
    "reference_points",
    "run_attack",
    "save_image",
    "schedule",
    "serialize_landmarks",
    "to_reference",
    "warp_face",
    "warp_image",
]
