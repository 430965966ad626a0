"""68-point facial landmark sets and the affine link between a canonical
reference frame and each input face.

Landmarks follow the standard 68-point convention: jaw 0-16, eyebrows 17-26,
nose 27-35, eyes 36-47, mouth 48-67. Points are (x, y) in pixel coordinates,
x growing right and y growing down. Affine transforms use the row-vector
convention ``p' = p @ A + b``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometryError, LandmarkParseError

LANDMARK_COUNT = 68

# Outer eye corners, nose tip, mouth corners: the alignment quintet used to
# estimate the reference <-> input affine transform.
ANCHOR_INDICES = (36, 45, 33, 48, 54)

# Determinant floor for the 3x3 normal matrix / the 2x2 linear part.
SINGULARITY_EPS = 1e-12


def _readonly(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr, dtype=np.float64)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class LandmarkSet:
    """Ordered set of exactly 68 facial points."""

    points: np.ndarray  # (68, 2) float64, read-only

    @classmethod
    def from_array(cls, points: np.ndarray) -> LandmarkSet:
        pts = np.asarray(points, dtype=np.float64)
        if pts.shape != (LANDMARK_COUNT, 2):
            raise ValueError(
                f"expected {LANDMARK_COUNT} points of (x, y), got shape {pts.shape}"
            )
        if not np.all(np.isfinite(pts)):
            raise ValueError("landmark coordinates must be finite")
        return cls(points=_readonly(pts))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LandmarkSet):
            return NotImplemented
        return np.array_equal(self.points, other.points)

    def __len__(self) -> int:
        return LANDMARK_COUNT


@dataclass(frozen=True)
class FivePointSet:
    """The five alignment anchors: outer eye corners, nose tip, mouth corners."""

    points: np.ndarray  # (5, 2) float64, read-only

    @classmethod
    def from_array(cls, points: np.ndarray) -> FivePointSet:
        pts = np.asarray(points, dtype=np.float64)
        if pts.shape != (5, 2):
            raise ValueError(f"expected 5 points of (x, y), got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("anchor coordinates must be finite")
        for i in range(5):
            for j in range(i + 1, 5):
                if np.array_equal(pts[i], pts[j]):
                    raise DegenerateGeometryError(
                        f"anchor points {i} and {j} coincide at {tuple(pts[i])}"
                    )
        return cls(points=_readonly(pts))


@dataclass(frozen=True)
class AffineTransform:
    """2D affine map ``p' = p @ A + b`` with A = [[a11, a12], [a21, a22]]
    and b = (tx, ty)."""

    a11: float
    a12: float
    a21: float
    a22: float
    tx: float
    ty: float

    @classmethod
    def identity(cls) -> AffineTransform:
        return cls(1.0, 0.0, 0.0, 1.0, 0.0, 0.0)

    @classmethod
    def from_matrix(cls, matrix: np.ndarray, offset: np.ndarray) -> AffineTransform:
        m = np.asarray(matrix, dtype=np.float64)
        t = np.asarray(offset, dtype=np.float64)
        return cls(m[0, 0], m[0, 1], m[1, 0], m[1, 1], t[0], t[1])

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a11, self.a12], [self.a21, self.a22]])

    @property
    def offset(self) -> np.ndarray:
        return np.array([self.tx, self.ty])

    def determinant(self) -> float:
        return self.a11 * self.a22 - self.a12 * self.a21


@dataclass(frozen=True)
class ReferenceSpace:
    """Canonical face frame: nose tip at the origin, inter-outer-eye-corner
    distance equal to ``unit``."""

    canonical_five: FivePointSet
    unit: float

    def __post_init__(self) -> None:
        if not self.unit > 0:
            raise ValueError("reference unit must be positive")


def _default_reference() -> ReferenceSpace:
    # y grows downward: eyes above the nose tip, mouth below.
    five = FivePointSet.from_array(
        [
            [-0.5, -0.3],  # outer corner, left eye (36)
            [0.5, -0.3],  # outer corner, right eye (45)
            [0.0, 0.0],  # nose tip (33)
            [-0.28, 0.35],  # mouth corner, left (48)
            [0.28, 0.35],  # mouth corner, right (54)
        ]
    )
    return ReferenceSpace(canonical_five=five, unit=1.0)


DEFAULT_REFERENCE = _default_reference()


def parse_landmarks(text: str) -> LandmarkSet:
    """Parse sidecar text: one "x y" pair per line, exactly 68 points.

    Blank lines and trailing whitespace are tolerated. Errors identify the
    offending (1-based) line.
    """
    points = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) != 2:
            raise LandmarkParseError(
                f"line {lineno}: expected 'x y', got {len(tokens)} tokens"
            )
        try:
            x, y = float(tokens[0]), float(tokens[1])
        except ValueError:
            raise LandmarkParseError(
                f"line {lineno}: non-numeric token in {line!r}"
            ) from None
        if not (math.isfinite(x) and math.isfinite(y)):
            raise LandmarkParseError(f"line {lineno}: non-finite coordinate in {line!r}")
        points.append((x, y))
    if len(points) != LANDMARK_COUNT:
        raise LandmarkParseError(
            f"expected {LANDMARK_COUNT} points, found {len(points)}"
        )
    return LandmarkSet.from_array(np.array(points))


def serialize_landmarks(lm: LandmarkSet) -> str:
    """Canonical sidecar text: shortest round-trip decimal, one point per line."""
    lines = [f"{repr(x)} {repr(y)}" for x, y in lm.points.tolist()]
    return "\n".join(lines) + "\n"


def reference_points(lm: LandmarkSet) -> FivePointSet:
    """Select the five alignment anchors (36, 45, 33, 48, 54), in that order."""
    return FivePointSet.from_array(lm.points[list(ANCHOR_INDICES)])


def estimate_affine(src: FivePointSet, dst: FivePointSet) -> AffineTransform:
    """Least-squares affine mapping src points onto dst points.

    Minimizes the sum of squared residuals over the six parameters by
    solving the normal equations of the stacked 10x6 system. Raises
    DegenerateGeometryError when the src points are collinear.
    """
    s = src.points
    d = dst.points
    design = np.column_stack([s, np.ones(len(s))])  # (5, 3)
    normal = design.T @ design  # (3, 3)
    if abs(np.linalg.det(normal)) < SINGULARITY_EPS:
        raise DegenerateGeometryError(
            "source anchors are collinear; affine estimation is rank-deficient"
        )
    params = np.linalg.solve(normal, design.T @ d)  # (3, 2): rows of A then b
    return AffineTransform.from_matrix(params[:2], params[2])


def affine_residual(t: AffineTransform, src: FivePointSet, dst: FivePointSet) -> float:
    """Sum of squared per-coordinate residuals of dst - T(src)."""
    mapped = apply_affine(t, src.points)
    return float(np.sum((dst.points - mapped) ** 2))


def apply_affine(t: AffineTransform, pts: np.ndarray) -> np.ndarray:
    """Map points (n, 2) through the transform; order preserved."""
    pts = np.asarray(pts, dtype=np.float64)
    return pts @ t.matrix + t.offset


def invert_affine(t: AffineTransform) -> AffineTransform:
    """Inverse transform; raises DegenerateGeometryError on singular A."""
    det = t.determinant()
    if abs(det) <= SINGULARITY_EPS:
        raise DegenerateGeometryError(f"affine transform is singular (det={det!r})")
    inv = np.linalg.inv(t.matrix)
    return AffineTransform.from_matrix(inv, -t.offset @ inv)


def compose_affine(first: AffineTransform, second: AffineTransform) -> AffineTransform:
    """Transform applying ``first`` then ``second``."""
    m = first.matrix @ second.matrix
    b = first.offset @ second.matrix + second.offset
    return AffineTransform.from_matrix(m, b)


def to_reference(
    lm: LandmarkSet, ref: ReferenceSpace = DEFAULT_REFERENCE
) -> tuple[LandmarkSet, AffineTransform]:
    """Express landmarks in the canonical reference frame.

    Returns ``(lm_ref, t)`` where ``t`` maps reference space onto the input
    face and ``apply_affine(t, lm_ref.points)`` recovers the input landmarks.
    """
    t = estimate_affine(ref.canonical_five, reference_points(lm))
    lm_ref = apply_affine(invert_affine(t), lm.points)
    return LandmarkSet.from_array(lm_ref), t
