"""Black-box identification oracles and strict query accounting.

An oracle maps an image to an optional identity label plus a confidence in
[0, 1]. The local oracle matches a toy embedding (mean-centered, unit-norm
32x32 grayscale) against an enrolled gallery by clamped cosine similarity;
the remote oracle speaks the HTTP wire protocol served by
:mod:`facewarp.service`. Every oracle call goes through a
:class:`QueryLedger`, and a spent query stays spent even when the transport
fails.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Protocol, Sequence

import httpx
import numpy as np

from .errors import BudgetExhaustedError, GalleryError, OracleTransportError
from .images import Image, encode_png, load_image

EMBED_GRID = 32
EMBED_DIM = EMBED_GRID * EMBED_GRID
EXTRACTOR_ID = "gray32-zeromean-unit-v1"
GRAY_WEIGHTS = np.array([0.299, 0.587, 0.114])
DEFAULT_THRESHOLD = 0.95

CLIENT_TOKEN_HEADER = "X-Client-Token"


@dataclass(frozen=True)
class OracleResponse:
    """Hard-label output of the black box: no identity means "not recognized"."""

    identity: str | None
    confidence: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must be in [0, 1], got {self.confidence}")


@dataclass
class QueryLedger:
    """Monotone counter of oracle calls against a hard budget."""

    budget: int
    used: int = 0

    def __post_init__(self) -> None:
        if self.budget < 0:
            raise ValueError("budget must be nonnegative")
        if not 0 <= self.used <= self.budget:
            raise ValueError("used must lie in [0, budget]")

    @property
    def remaining(self) -> int:
        return self.budget - self.used

    def charge(self) -> None:
        """Consume one query; raises before any I/O has happened."""
        if self.used >= self.budget:
            raise BudgetExhaustedError(
                f"query budget exhausted ({self.used}/{self.budget} used)"
            )
        self.used += 1


@lru_cache(maxsize=None)
def _resample_matrix(n_in: int, n_out: int) -> np.ndarray:
    """Row-stochastic area-overlap weights mapping n_in samples to n_out."""
    w = np.zeros((n_out, n_in))
    cell = n_in / n_out
    for o in range(n_out):
        start, end = o * cell, (o + 1) * cell
        i0, i1 = int(np.floor(start)), min(int(np.ceil(end)), n_in)
        for i in range(i0, i1):
            w[o, i] = max(0.0, min(end, i + 1) - max(start, i))
    w /= w.sum(axis=1, keepdims=True)
    w.flags.writeable = False
    return w


def extract_embedding(img: Image) -> np.ndarray:
    """Toy stand-in for a CNN face embedding.

    Grayscale, area-average to 32x32, subtract the mean, L2-normalize.
    Constant images (zero variance) embed to the zero vector.
    """
    p = img.pixels
    gray = p[:, :, 0] if img.channels == 1 else p @ GRAY_WEIGHTS
    small = _resample_matrix(img.height, EMBED_GRID) @ gray @ _resample_matrix(img.width, EMBED_GRID).T
    v = small.ravel()
    v = v - v.mean()
    norm = float(np.linalg.norm(v))
    if norm < 1e-12:
        return np.zeros(EMBED_DIM)
    return v / norm


@dataclass(frozen=True)
class Gallery:
    """Enrolled identities with unit-norm embeddings and a fixed match
    threshold."""

    labels: tuple[str, ...]
    embeddings: np.ndarray  # (n, EMBED_DIM), unit rows, read-only
    threshold: float = DEFAULT_THRESHOLD
    extractor_id: str = EXTRACTOR_ID

    def __post_init__(self) -> None:
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError(f"threshold must be in [0, 1], got {self.threshold}")
        if len(set(self.labels)) != len(self.labels):
            raise GalleryError("gallery labels must be unique")
        if self.embeddings.shape != (len(self.labels), EMBED_DIM):
            raise GalleryError(
                f"expected embeddings of shape ({len(self.labels)}, {EMBED_DIM}), "
                f"got {self.embeddings.shape}"
            )

    @classmethod
    def empty(cls, threshold: float = DEFAULT_THRESHOLD) -> Gallery:
        emb = np.zeros((0, EMBED_DIM))
        emb.flags.writeable = False
        return cls(labels=(), embeddings=emb, threshold=threshold)

    def __len__(self) -> int:
        return len(self.labels)


def enroll(gallery: Gallery, label: str, images: Sequence[Image]) -> Gallery:
    """Return a new gallery with ``label`` enrolled as the normalized mean
    of the images' embeddings."""
    if label in gallery.labels:
        raise GalleryError(f"label {label!r} already enrolled")
    if not images:
        raise GalleryError(f"label {label!r} needs at least one enrollment image")
    mean = np.mean([extract_embedding(im) for im in images], axis=0)
    norm = float(np.linalg.norm(mean))
    if norm < 1e-12:
        raise GalleryError(f"label {label!r} enrollment collapses to a zero embedding")
    emb = np.vstack([gallery.embeddings, mean / norm])
    emb.flags.writeable = False
    return Gallery(
        labels=gallery.labels + (label,),
        embeddings=emb,
        threshold=gallery.threshold,
        extractor_id=gallery.extractor_id,
    )


def match(embedding: np.ndarray, gallery: Gallery) -> OracleResponse:
    """Best clamped-cosine match; ties break toward the smallest label."""
    if len(gallery) == 0:
        raise GalleryError("cannot match against an empty gallery")
    emb = np.asarray(embedding, dtype=np.float64)
    if emb.shape != (EMBED_DIM,):
        raise ValueError(f"expected embedding of shape ({EMBED_DIM},), got {emb.shape}")
    norm = float(np.linalg.norm(emb))
    if norm < 1e-12:
        sims = np.zeros(len(gallery))
    else:
        sims = gallery.embeddings @ (emb / norm)
    sims = np.clip(sims, 0.0, 1.0)
    best = float(sims.max())
    label = min(lbl for lbl, s in zip(gallery.labels, sims) if s == best)
    if best >= gallery.threshold:
        return OracleResponse(identity=label, confidence=best)
    return OracleResponse(identity=None, confidence=best)


class Oracle(Protocol):
    """Anything that answers an identification query for an image."""

    def respond(self, img: Image) -> OracleResponse: ...


def identify(oracle: Oracle, img: Image, ledger: QueryLedger) -> OracleResponse:
    """Submit one query, charging the ledger first.

    Budget exhaustion raises before any I/O; a transport failure after the
    charge leaves the query spent.
    """
    ledger.charge()
    return oracle.respond(img)


@dataclass(frozen=True)
class LocalOracle:
    """In-process oracle over an enrolled gallery."""

    gallery: Gallery

    def respond(self, img: Image) -> OracleResponse:
        return match(extract_embedding(img), self.gallery)


class RemoteOracle:
    """HTTP client for the identification wire protocol.

    POSTs ``{"image_b64": <base64 PNG>}`` to ``<base_url>/identify`` and
    expects ``{"identity": str|null, "confidence": number}`` back. Any
    non-200 outcome (including a 429 server-side budget refusal) surfaces
    as :class:`OracleTransportError`.
    """

    def __init__(
        self,
        base_url: str,
        client_token: str | None = None,
        timeout: float = 10.0,
        transport: httpx.BaseTransport | None = None,
    ) -> None:
        self.base_url = base_url.rstrip("/")
        headers = {CLIENT_TOKEN_HEADER: client_token} if client_token else None
        self._client = httpx.Client(
            base_url=self.base_url, headers=headers, timeout=timeout, transport=transport
        )

    def respond(self, img: Image) -> OracleResponse:
        payload = {"image_b64": base64.b64encode(encode_png(img)).decode("ascii")}
        try:
            r = self._client.post("/identify", json=payload)
        except httpx.HTTPError as exc:
            raise OracleTransportError(f"identify request failed: {exc}") from exc
        if r.status_code == 429:
            raise OracleTransportError("server refused query: budget_exhausted (HTTP 429)")
        if r.status_code != 200:
            raise OracleTransportError(f"identify returned HTTP {r.status_code}")
        try:
            data = r.json()
            identity = data["identity"]
            confidence = float(data["confidence"])
        except (ValueError, KeyError, TypeError) as exc:
            raise OracleTransportError(f"malformed identify response: {exc}") from exc
        return OracleResponse(identity=identity, confidence=confidence)

    def close(self) -> None:
        self._client.close()

    def __enter__(self) -> RemoteOracle:
        return self

    def __exit__(self, *exc_info: object) -> None:
        self.close()


def load_gallery(manifest_path: str | Path) -> Gallery:
    """Build a gallery from a JSON manifest.

    Schema: ``{"threshold": t, "identities": [{"label": s, "images": [paths]}]}``
    with image paths resolved relative to the manifest's directory.
    """
    manifest_path = Path(manifest_path)
    try:
        data = json.loads(manifest_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise GalleryError(f"cannot read gallery manifest {manifest_path}: {exc}") from exc
    try:
        threshold = float(data["threshold"])
        identities = data["identities"]
    except (KeyError, TypeError, ValueError) as exc:
        raise GalleryError(f"malformed gallery manifest {manifest_path}: {exc}") from exc
    gallery = Gallery.empty(threshold=threshold)
    base = manifest_path.parent
    for entry in identities:
        try:
            label = str(entry["label"])
            paths = [base / p for p in entry["images"]]
        except (KeyError, TypeError) as exc:
            raise GalleryError(f"malformed identity entry in {manifest_path}: {exc}") from exc
        images = [load_image(p) for p in paths]
        gallery = enroll(gallery, label, images)
    return gallery
