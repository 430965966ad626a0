"""Deterministic synthetic face fixtures.

Generates cartoon faces with valid 68-point landmark sets for desk-scale
experiments. Identity-specific block noise is concentrated in a nose patch
whose supporting landmarks all sit far from the nose tip: stretch-nose
warps then displace the whole patch by most of their nominal magnitude, so
the toy embedding loses exactly the texture that identifies a face, while
the rest of the image stays quiet. Everything is seeded, so identical
parameters reproduce byte-identical fixtures.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image as PILImage
from PIL import ImageDraw

from .images import Image
from .landmarks import LandmarkSet, serialize_landmarks

# Base layout in face units: x in [-1, 1], y down, nose tip near (0, 0.3).
# The brow line sits high enough above the nose bridge that stretch-nose
# warps up to scale 0.3 cannot fold the mesh.
_JAW_T = np.linspace(0.0, np.pi, 17)
_BROW_ARCH = np.sin(np.linspace(0.0, np.pi, 5)) * 0.06


@dataclass(frozen=True)
class FaceStyle:
    """Per-identity geometry, texture, and palette knobs."""

    eye_spread: float = 1.0
    brow_height: float = 1.0
    mouth_width: float = 1.0
    nose_width: float = 1.0
    nose_length: float = 1.0
    jaw_width: float = 1.0
    face_scale: float = 0.36
    noise_seed: int = 7000
    noise_block: float = 0.16  # in units of the inter-eye distance
    noise_amp: float = 105.0
    skin: tuple[int, int, int] = (205, 180, 160)
    nose: tuple[int, int, int] = (115, 85, 75)
    mouth: tuple[int, int, int] = (185, 140, 130)
    brow: tuple[int, int, int] = (165, 140, 115)


def face_landmarks(width: int, height: int, style: FaceStyle = FaceStyle()) -> LandmarkSet:
    """68 landmarks for a frontal synthetic face centered in the frame."""
    s = style.face_scale * min(width, height)
    cx, cy = width / 2.0, height / 2.0 - 0.08 * s

    pts = np.zeros((68, 2))
    # jaw 0-16: left ear over the chin to the right ear
    pts[0:17, 0] = -np.cos(_JAW_T) * style.jaw_width
    pts[0:17, 1] = np.sin(_JAW_T) * 1.15
    # eyebrows 17-21 / 22-26
    brow_y = -0.74 * style.brow_height
    pts[17:22, 0] = np.linspace(-0.85, -0.22, 5) * style.eye_spread
    pts[17:22, 1] = brow_y - _BROW_ARCH
    pts[22:27, 0] = np.linspace(0.22, 0.85, 5) * style.eye_spread
    pts[22:27, 1] = brow_y - _BROW_ARCH
    # nose bridge 27-30 straight down the midline; base 31-35 raised beside
    # the bridge foot, except the tip 33, which hangs low so the rest of the
    # nose group keeps a large distance-to-tip ratio
    pts[27:31, 0] = 0.0
    pts[27:31, 1] = np.array([-0.22, -0.10, 0.02, 0.12]) * style.nose_length
    pts[31:36, 0] = np.array([-0.32, -0.16, 0.0, 0.16, 0.32]) * style.nose_width
    pts[31:36, 1] = np.array([0.12, 0.14, 0.30, 0.14, 0.12]) * style.nose_length
    # eyes 36-41 (left) and 42-47 (right), set wide for a large warp unit
    left = np.array(
        [[-0.82, -0.30], [-0.72, -0.38], [-0.56, -0.38], [-0.46, -0.30], [-0.56, -0.22], [-0.72, -0.22]]
    )
    pts[36:42] = left * [style.eye_spread, 1.0]
    right = left.copy()
    right[:, 0] *= -1.0
    # mirrored order: inner corner, upper lid, outer corner, lower lid
    pts[42:48] = right[[3, 2, 1, 0, 5, 4]] * [style.eye_spread, 1.0]
    # outer lip 48-59, inner lip 60-67
    outer = np.array(
        [
            [-0.38, 0.62], [-0.25, 0.53], [-0.12, 0.49], [0.0, 0.51], [0.12, 0.49],
            [0.25, 0.53], [0.38, 0.62], [0.25, 0.71], [0.12, 0.76], [0.0, 0.77],
            [-0.12, 0.76], [-0.25, 0.71],
        ]
    )
    inner = np.array(
        [
            [-0.30, 0.62], [-0.14, 0.57], [0.0, 0.58], [0.14, 0.57], [0.30, 0.62],
            [0.14, 0.67], [0.0, 0.68], [-0.14, 0.67],
        ]
    )
    pts[48:60] = outer * [style.mouth_width, 1.0]
    pts[60:68] = inner * [style.mouth_width, 1.0]

    return LandmarkSet.from_array(pts * s + [cx, cy])


def render_face(
    lm: LandmarkSet,
    width: int,
    height: int,
    style: FaceStyle = FaceStyle(),
    grayscale: bool = False,
) -> Image:
    """Rasterize a face over a flat background."""
    p = lm.points
    s = style.face_scale * min(width, height)
    canvas = PILImage.new("RGB", (width, height), (190, 190, 190))
    draw = ImageDraw.Draw(canvas)

    def poly(idx: list[int] | range, fill: tuple[int, int, int]) -> None:
        draw.polygon([tuple(p[i]) for i in idx], fill=fill)

    # head: jaw outline closed through a forehead arc
    brow_top = p[17:27, 1].min()
    forehead_y = brow_top - 0.22 * (p[8, 1] - brow_top)
    draw.polygon(
        [tuple(q) for q in p[0:17]] + [(p[16, 0], forehead_y), (p[0, 0], forehead_y)],
        fill=style.skin,
    )

    # nose patch: wide at the bridge top, tapering over the raised base row
    # and down to the hanging tip
    top_half = 0.38 * s
    wedge = [
        (p[27, 0] - top_half, p[27, 1]),
        (p[27, 0] + top_half, p[27, 1]),
        (p[35, 0] + 0.06 * s, p[35, 1]),
        (p[33, 0] + 0.10 * s, p[33, 1]),
        (p[33, 0] - 0.10 * s, p[33, 1]),
        (p[31, 0] - 0.06 * s, p[31, 1]),
    ]
    draw.polygon(wedge, fill=style.nose)

    # eyes: sclera + pupil, deliberately low contrast
    for eye in (range(36, 42), range(42, 48)):
        poly(eye, (222, 218, 210))
        c = p[list(eye)].mean(axis=0)
        r = 0.28 * (p[list(eye)][:, 0].max() - p[list(eye)][:, 0].min()) / 2.0
        draw.ellipse([c[0] - r, c[1] - r, c[0] + r, c[1] + r], fill=(90, 85, 90))

    # eyebrows
    unit = abs(p[45, 0] - p[36, 0])
    bw = max(2, int(0.04 * unit))
    draw.line([tuple(p[i]) for i in range(17, 22)], fill=style.brow, width=bw)
    draw.line([tuple(p[i]) for i in range(22, 27)], fill=style.brow, width=bw)

    # mouth
    poly(range(48, 60), style.mouth)
    poly(range(60, 68), tuple(max(0, c - 30) for c in style.mouth))

    arr = np.asarray(canvas, dtype=np.float64)

    # identity-specific block noise over the upper nose patch; every
    # supporting landmark there moves by most of the warp magnitude.
    # Checkerboard signs make any shift of a block or more anti-correlate,
    # and the per-identity grid offset plus block size keep different
    # identities' patterns misaligned.
    mask_img = PILImage.new("L", (width, height), 0)
    ImageDraw.Draw(mask_img).polygon(wedge, fill=255)
    mask = np.asarray(mask_img) > 0
    yy = np.mgrid[0:height, 0:width][0]
    mask &= yy <= p[31, 1] + 0.04 * s
    block = max(4, int(round(style.noise_block * unit)))
    rng = np.random.default_rng(style.noise_seed)
    grid_h = (height + 2 * block) // block + 2
    grid_w = (width + 2 * block) // block + 2
    magnitude = rng.uniform(0.45, 1.0, (grid_h, grid_w))
    sign = np.indices((grid_h, grid_w)).sum(axis=0) % 2 * 2 - 1
    ox = int(rng.integers(0, 2 * block))
    oy = int(rng.integers(0, 2 * block))
    noise = np.kron(magnitude * sign, np.ones((block, block)))[oy : oy + height, ox : ox + width]
    arr[mask] = np.clip(arr[mask] + style.noise_amp * noise[mask][:, np.newaxis], 0.0, 255.0)

    if grayscale:
        arr = arr @ [0.299, 0.587, 0.114]
    return Image.from_array(arr / 255.0)


def identity_style(index: int) -> FaceStyle:
    """Stable per-identity style variation."""
    rng = np.random.default_rng(1000 + index)
    jitter = lambda lo, hi: float(rng.uniform(lo, hi))
    shade = lambda base, amt: tuple(int(np.clip(c + rng.integers(-amt, amt + 1), 0, 255)) for c in base)
    return FaceStyle(
        eye_spread=jitter(0.94, 1.02),
        brow_height=jitter(1.0, 1.08),
        mouth_width=jitter(0.85, 1.15),
        nose_width=jitter(0.90, 1.10),
        nose_length=jitter(0.90, 1.05),
        jaw_width=jitter(0.92, 1.08),
        face_scale=jitter(0.33, 0.38),
        noise_seed=7000 + index,
        # laddered block sizes keep noise grids of different identities
        # misaligned
        noise_block=0.125 + 0.012 * (index % 6) + jitter(0.0, 0.008),
        noise_amp=jitter(108.0, 124.0),
        skin=shade((205, 180, 160), 20),
        nose=shade((115, 85, 75), 15),
        mouth=shade((185, 140, 130), 20),
        brow=shade((165, 140, 115), 20),
    )


def synthetic_face(
    index: int = 0, size: int = 128, grayscale: bool = False
) -> tuple[Image, LandmarkSet]:
    """One deterministic fixture face: image plus matching landmarks."""
    style = identity_style(index)
    lm = face_landmarks(size, size, style)
    return render_face(lm, size, size, style, grayscale=grayscale), lm


def write_fixture_corpus(
    root: str | Path,
    n_identities: int = 6,
    size: int = 128,
    threshold: float = 0.8,
) -> Path:
    """Write a self-enrolled corpus: per identity one PNG, one landmark
    sidecar, and a manifest enrolling that same image. Returns the manifest
    path."""
    from .images import save_image

    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    identities = []
    for i in range(n_identities):
        label = f"id{i:02d}"
        img, lm = synthetic_face(i, size=size)
        save_image(img, root / f"{label}.png")
        (root / f"{label}.lms").write_text(serialize_landmarks(lm), encoding="utf-8")
        identities.append({"label": label, "images": [f"{label}.png"]})
    manifest = {"threshold": threshold, "identities": identities}
    manifest_path = root / "gallery.json"
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return manifest_path
