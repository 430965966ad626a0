"""Float image values in [0, 1] plus 8-bit PNG encode/decode.

PNG samples convert to float by value/255 on read and back with
round-half-up on write, so a read-write cycle is lossless.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image as PILImage


@dataclass(frozen=True)
class Image:
    """Row-major intensity grid, 1 (gray) or 3 (RGB) channels."""

    pixels: np.ndarray  # (H, W, C) float64 in [0, 1], read-only

    @classmethod
    def from_array(cls, pixels: np.ndarray) -> Image:
        arr = np.asarray(pixels, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[:, :, np.newaxis]
        if arr.ndim != 3 or arr.shape[2] not in (1, 3):
            raise ValueError(f"expected (H, W) or (H, W, 1|3) samples, got {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        if not np.all(np.isfinite(arr)):
            raise ValueError("image samples must be finite")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("image samples must lie in [0, 1]")
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        return cls(pixels=arr)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Image):
            return NotImplemented
        return np.array_equal(self.pixels, other.pixels)


def _to_uint8(img: Image) -> np.ndarray:
    # round-half-up, not banker's rounding
    return np.floor(img.pixels * 255.0 + 0.5).clip(0, 255).astype(np.uint8)


def _from_pil(pil: PILImage.Image) -> Image:
    if pil.mode == "L":
        arr = np.asarray(pil, dtype=np.float64)[:, :, np.newaxis]
    else:
        if pil.mode != "RGB":
            pil = pil.convert("RGB")
        arr = np.asarray(pil, dtype=np.float64)
    return Image.from_array(arr / 255.0)


def encode_png(img: Image) -> bytes:
    data = _to_uint8(img)
    mode = "L" if img.channels == 1 else "RGB"
    pil = PILImage.fromarray(data[:, :, 0] if mode == "L" else data, mode=mode)
    buf = io.BytesIO()
    pil.save(buf, format="PNG")
    return buf.getvalue()


def decode_png(data: bytes) -> Image:
    with PILImage.open(io.BytesIO(data)) as pil:
        pil.load()
        return _from_pil(pil)


def load_image(path: str | Path) -> Image:
    with PILImage.open(path) as pil:
        pil.load()
        return _from_pil(pil)


def save_image(img: Image, path: str | Path) -> None:
    Path(path).write_bytes(encode_png(img))
