"""Landmark displacement recipes and the dense piecewise-affine image warp.

Each warping function moves a fixed set of landmark indices by vectors
proportional to ``scale`` (in reference-space units). The dense warp
triangulates the displaced landmarks plus fixed border anchors and
backward-maps every output pixel through its triangle's affine, sampling
the source bilinearly with clamp-to-edge.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import Delaunay

from .errors import OutOfFrameError
from .images import Image
from .landmarks import (
    DEFAULT_REFERENCE,
    LandmarkSet,
    ReferenceSpace,
    apply_affine,
    to_reference,
)

MAX_SCALE = 0.5

# Interpolated source coordinates this close to an integer are snapped to it,
# so sub-noise meshes (identity, affine round-trip residue) copy samples
# exactly instead of collecting ~1e-12 bilinear dust.
SNAP_EPS = 1e-6


class WarpFunction(enum.Enum):
    """The five landmark-displacement recipes."""

    RAISE_EYEBROW = "raise_eyebrow"
    SMILE = "smile"
    STRETCH_NOSE = "stretch_nose"
    CHUBBIFY = "chubbify"
    OPEN_EYES = "open_eyes"


# Landmark indices each function is allowed to move. The attack-facing trio
# (raise_eyebrow, smile, stretch_nose) is pairwise disjoint, which is what
# makes per-function warps act on independent face regions.
DRIVEN_INDICES: dict[WarpFunction, frozenset[int]] = {
    WarpFunction.RAISE_EYEBROW: frozenset(range(17, 27)),
    WarpFunction.SMILE: frozenset({48, 49, 53, 54, 55, 59}),
    WarpFunction.STRETCH_NOSE: frozenset(range(27, 36)),
    WarpFunction.CHUBBIFY: frozenset(range(0, 17)),
    WarpFunction.OPEN_EYES: frozenset({37, 38, 43, 44, 40, 41, 46, 47} | set(range(17, 27))),
}

NOSE_TIP = 33


@dataclass(frozen=True)
class WarpSpec:
    """One node of the attack schedule: a warping function plus its scale."""

    function: WarpFunction
    scale: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.scale <= MAX_SCALE:
            raise ValueError(f"scale must be in [0, {MAX_SCALE}], got {self.scale}")


def _displacements(points: np.ndarray, fn: WarpFunction, scale: float, unit: float) -> np.ndarray:
    """Per-landmark displacement vectors (68, 2); zero outside the driven set."""
    d = np.zeros((len(points), 2))
    s = scale * unit
    if fn is WarpFunction.RAISE_EYEBROW:
        d[17:27, 1] = -s
    elif fn is WarpFunction.SMILE:
        d[48] = (-0.6 * s, -0.6 * s)
        d[54] = (0.6 * s, -0.6 * s)
        d[49] = d[59] = (-0.3 * s, -0.3 * s)
        d[53] = d[55] = (0.3 * s, -0.3 * s)
    elif fn is WarpFunction.STRETCH_NOSE:
        idx = np.arange(27, 36)
        rel = points[idx] - points[NOSE_TIP]
        rmax = np.linalg.norm(rel, axis=1).max()
        if rmax > 0:
            d[idx] = s * rel / rmax  # radial, magnitude s * (dist / rmax); tip stays put
    elif fn is WarpFunction.CHUBBIFY:
        idx = np.arange(0, 17)
        rel = points[idx] - points[NOSE_TIP]
        dist = np.linalg.norm(rel, axis=1)
        safe = dist > 1e-12
        d[idx[safe]] = s * rel[safe] / dist[safe, np.newaxis]
    elif fn is WarpFunction.OPEN_EYES:
        d[[37, 38, 43, 44], 1] = -0.5 * s
        d[[40, 41, 46, 47], 1] = 0.5 * s
        d[17:27, 1] = -0.25 * s
    else:  # pragma: no cover - closed enumeration
        raise ValueError(f"unknown warping function {fn!r}")
    return d


def displace_landmarks(
    lm_ref: LandmarkSet, fn: WarpFunction, scale: float, unit: float = 1.0
) -> LandmarkSet:
    """Apply a displacement recipe to landmarks expressed in reference space.

    Only the function's driven indices move; every other point is returned
    bit-identical. Displacements are linear in ``scale``.
    """
    if not 0.0 <= scale <= MAX_SCALE:
        raise ValueError(f"scale must be in [0, {MAX_SCALE}], got {scale}")
    d = _displacements(lm_ref.points, fn, scale, unit)
    moved = sorted(DRIVEN_INDICES[fn])
    out = lm_ref.points.copy()
    out[moved] += d[moved]
    return LandmarkSet.from_array(out)


def _border_anchors(width: int, height: int) -> np.ndarray:
    """Four corners plus four edge midpoints of the pixel-center rectangle."""
    xmax, ymax = float(width - 1), float(height - 1)
    return np.array(
        [
            [0.0, 0.0],
            [xmax, 0.0],
            [0.0, ymax],
            [xmax, ymax],
            [xmax / 2.0, 0.0],
            [xmax / 2.0, ymax],
            [0.0, ymax / 2.0],
            [xmax, ymax / 2.0],
        ]
    )


def _signed_areas(points: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    a = points[triangles[:, 0]]
    b = points[triangles[:, 1]]
    c = points[triangles[:, 2]]
    return 0.5 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (c[:, 0] - a[:, 0]) * (b[:, 1] - a[:, 1]))


@dataclass(frozen=True)
class WarpMesh:
    """Correspondence mesh: landmarks plus border anchors, triangulated on
    the destination points."""

    src_points: np.ndarray  # (76, 2)
    dst_points: np.ndarray  # (76, 2)
    triangles: np.ndarray  # (T, 3) indices into the point lists
    width: int
    height: int
    delaunay: Delaunay = field(repr=False, compare=False)


def build_warp_mesh(
    src_lm: LandmarkSet, dst_lm: LandmarkSet, width: int, height: int
) -> WarpMesh:
    """Mesh the full image rectangle over the landmark correspondence.

    Appends 8 fixed border anchors to both point sets and Delaunay-
    triangulates the destination points, so every pixel center falls inside
    at least one triangle. Destination landmarks more than a quarter image
    outside the frame are rejected before meshing.
    """
    if width < 2 or height < 2:
        raise ValueError("mesh needs an image of at least 2x2 pixels")
    dst = dst_lm.points
    lo = np.array([-0.25 * width, -0.25 * height])
    hi = np.array([1.25 * width, 1.25 * height])
    bad = np.nonzero((dst < lo) | (dst > hi))[0]
    if bad.size:
        i = int(bad[0])
        raise OutOfFrameError(
            f"destination landmark {i} at {tuple(dst[i])} is outside "
            f"[-0.25, 1.25] x image bounds ({width}x{height})"
        )
    anchors = _border_anchors(width, height)
    src_points = np.vstack([src_lm.points, anchors])
    dst_points = np.vstack([dst, anchors])
    tri = Delaunay(dst_points)
    triangles = tri.simplices
    dst_area = _signed_areas(dst_points, triangles)
    src_area = _signed_areas(src_points, triangles)
    folded = (np.sign(dst_area) != np.sign(src_area)) | (np.abs(src_area) < 1e-12)
    if folded.any():
        warnings.warn(
            f"{int(folded.sum())} of {len(triangles)} mesh triangles fold over; "
            "warp output in those regions is best-effort",
            RuntimeWarning,
            stacklevel=2,
        )
    return WarpMesh(
        src_points=src_points,
        dst_points=dst_points,
        triangles=triangles,
        width=width,
        height=height,
        delaunay=tri,
    )


def _barycentric(tri: Delaunay, simplex: np.ndarray, pts: np.ndarray) -> np.ndarray:
    t = tri.transform[simplex]  # (N, 3, 2)
    b = np.einsum("nij,nj->ni", t[:, :2], pts - t[:, 2])
    return np.column_stack([b, 1.0 - b.sum(axis=1)])


def _nearest_triangle(tri: Delaunay, pts: np.ndarray) -> np.ndarray:
    """Fallback triangle assignment by nearest centroid (uncovered pixels)."""
    finite = np.all(np.isfinite(tri.transform.reshape(len(tri.simplices), -1)), axis=1)
    candidates = np.nonzero(finite)[0]
    centroids = tri.points[tri.simplices[candidates]].mean(axis=1)
    d2 = ((pts[:, np.newaxis, :] - centroids[np.newaxis, :, :]) ** 2).sum(axis=2)
    return candidates[np.argmin(d2, axis=1)]


def warp_image(img: Image, mesh: WarpMesh) -> Image:
    """Backward-map the image through the mesh.

    Each output pixel center locates its destination triangle, maps to the
    source via that triangle's affine, and samples bilinearly with source
    coordinates clamped to the image rectangle.
    """
    if (img.width, img.height) != (mesh.width, mesh.height):
        raise ValueError(
            f"mesh built for {mesh.width}x{mesh.height}, image is {img.width}x{img.height}"
        )
    h, w = img.height, img.width
    xs, ys = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
    pts = np.column_stack([xs.ravel(), ys.ravel()])

    tri = mesh.delaunay
    simplex = tri.find_simplex(pts)
    missing = simplex < 0
    if missing.any():
        simplex = simplex.copy()
        simplex[missing] = _nearest_triangle(tri, pts[missing])
    bary = _barycentric(tri, simplex, pts)
    degenerate = ~np.all(np.isfinite(bary), axis=1)
    if degenerate.any():
        simplex[degenerate] = _nearest_triangle(tri, pts[degenerate])
        bary[degenerate] = _barycentric(tri, simplex[degenerate], pts[degenerate])

    corners = mesh.src_points[mesh.triangles[simplex]]  # (N, 3, 2)
    src = np.einsum("nk,nkj->nj", bary, corners)

    snapped = np.round(src)
    near = np.abs(src - snapped) <= SNAP_EPS
    src[near] = snapped[near]

    sx = np.clip(src[:, 0], 0.0, w - 1.0)
    sy = np.clip(src[:, 1], 0.0, h - 1.0)
    x0 = np.floor(sx).astype(np.intp)
    y0 = np.floor(sy).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (sx - x0)[:, np.newaxis]
    fy = (sy - y0)[:, np.newaxis]

    p = img.pixels
    top = (1.0 - fx) * p[y0, x0] + fx * p[y0, x1]
    bottom = (1.0 - fx) * p[y1, x0] + fx * p[y1, x1]
    out = (1.0 - fy) * top + fy * bottom
    return Image.from_array(np.clip(out, 0.0, 1.0).reshape(h, w, img.channels))


def warp_face(
    img: Image,
    lm: LandmarkSet,
    spec: WarpSpec,
    ref: ReferenceSpace = DEFAULT_REFERENCE,
) -> tuple[Image, LandmarkSet]:
    """Apply one warping function to a face image.

    Landmarks are carried into the canonical reference frame, displaced
    there, and mapped back to the input frame, so ``scale`` means the same
    thing regardless of face size or position. Returns the warped image and
    the displaced landmarks.
    """
    lm_ref, t = to_reference(lm, ref)
    dst_ref = displace_landmarks(lm_ref, spec.function, spec.scale, unit=ref.unit)
    dst = LandmarkSet.from_array(apply_affine(t, dst_ref.points))
    mesh = build_warp_mesh(lm, dst, img.width, img.height)
    return warp_image(img, mesh), dst
