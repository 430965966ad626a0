"""Query-budgeted warping attack.

The search walks a depth-first schedule of (function, scale) nodes: every
scale of the first function, then the next function, truncated to the query
budget. Under cumulative composition each step warps the current working
image (so later steps produce hybrid faces touched by several functions);
under fresh composition each step warps the original. The run stops at the
first response satisfying the goal predicate or when the budget is spent.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .errors import OracleTransportError
from .images import Image
from .landmarks import DEFAULT_REFERENCE, LandmarkSet, ReferenceSpace
from .oracle import Oracle, OracleResponse, QueryLedger, identify
from .warp import MAX_SCALE, WarpFunction, WarpSpec, warp_face

Goal = Literal["dodge", "impersonation", "either"]
Composition = Literal["cumulative", "fresh"]

DEFAULT_ORDER = (WarpFunction.STRETCH_NOSE, WarpFunction.SMILE, WarpFunction.RAISE_EYEBROW)

STATUS_DODGE = "dodge"
STATUS_IMPERSONATION = "impersonation"
STATUS_FAILED = "failed"


@dataclass(frozen=True)
class AttackConfig:
    """Search parameters. ``scales`` defaults to three ``step`` increments."""

    order: tuple[WarpFunction, ...] = DEFAULT_ORDER
    scales: tuple[float, ...] | None = None
    budget: int = 3
    goal: Goal = "either"
    composition: Composition = "cumulative"
    step: float = 0.1

    def __post_init__(self) -> None:
        if self.budget < 1:
            raise ValueError("budget must be at least 1")
        if not self.order:
            raise ValueError("function order must be non-empty")
        if len(set(self.order)) != len(self.order):
            raise ValueError("function order must not repeat functions")
        if self.goal not in ("dodge", "impersonation", "either"):
            raise ValueError(f"unknown goal {self.goal!r}")
        if self.composition not in ("cumulative", "fresh"):
            raise ValueError(f"unknown composition {self.composition!r}")
        if self.scales is None:
            if not 0.0 < self.step <= MAX_SCALE / 3:
                raise ValueError(f"step must be in (0, {MAX_SCALE / 3:.4g}] to derive scales")
            object.__setattr__(
                self, "scales", tuple(round(self.step * k, 12) for k in (1, 2, 3))
            )
        scales = self.scales
        if not scales:
            raise ValueError("scales must be non-empty")
        if any(not 0.0 < s <= MAX_SCALE for s in scales):
            raise ValueError(f"scales must lie in (0, {MAX_SCALE}]")
        if any(b <= a for a, b in zip(scales, scales[1:])):
            raise ValueError("scales must be strictly ascending")


@dataclass(frozen=True)
class TraceEntry:
    """One query: the spec tried, the oracle's answer (None when the
    transport failed), and the L2 distance to the original image."""

    spec: WarpSpec
    response: OracleResponse | None
    delta: float
    error: str | None = None


@dataclass(frozen=True)
class AttackOutcome:
    status: str  # dodge | impersonation | failed
    queries_used: int
    trace: tuple[TraceEntry, ...]
    final_image: Image
    final_landmarks: LandmarkSet
    final_delta: float

    @property
    def succeeded(self) -> bool:
        return self.status != STATUS_FAILED


def l2_distance(x: Image, xw: Image) -> float:
    """Root mean squared per-sample difference; 0 for identical images,
    1 for all-black vs all-white."""
    if x.pixels.shape != xw.pixels.shape:
        raise ValueError(
            f"image shapes differ: {x.pixels.shape} vs {xw.pixels.shape}"
        )
    return float(np.sqrt(np.mean((x.pixels - xw.pixels) ** 2)))


def is_dodge(resp: OracleResponse, true_id: str) -> bool:
    """Dodge: the oracle recognizes no identity at all."""
    return resp.identity is None


def is_impersonation(resp: OracleResponse, true_id: str) -> bool:
    """Impersonation: the oracle names somebody else."""
    return resp.identity is not None and resp.identity != true_id


def _satisfies(resp: OracleResponse, true_id: str, goal: Goal) -> str | None:
    if goal in ("dodge", "either") and is_dodge(resp, true_id):
        return STATUS_DODGE
    if goal in ("impersonation", "either") and is_impersonation(resp, true_id):
        return STATUS_IMPERSONATION
    return None


def schedule(config: AttackConfig) -> list[WarpSpec]:
    """Depth-first enumeration: all scales of a function before the next
    function, truncated to the budget."""
    specs = [
        WarpSpec(function=fn, scale=s) for fn in config.order for s in config.scales
    ]
    return specs[: config.budget]


def run_attack(
    img: Image,
    lm: LandmarkSet,
    true_id: str,
    oracle: Oracle,
    config: AttackConfig = AttackConfig(),
    ref: ReferenceSpace = DEFAULT_REFERENCE,
) -> AttackOutcome:
    """Run the budgeted warp-and-query loop against one face.

    Owns a fresh ledger for the run. Distances are always measured against
    the original image. Transport failures consume their query, land in the
    trace, and the search moves on.
    """
    ledger = QueryLedger(budget=config.budget)
    working_img, working_lm = img, lm
    final_img, final_lm = img, lm
    trace: list[TraceEntry] = []
    status = STATUS_FAILED

    for spec in schedule(config):
        if config.composition == "cumulative":
            base_img, base_lm = working_img, working_lm
        else:
            base_img, base_lm = img, lm
        warped, warped_lm = warp_face(base_img, base_lm, spec, ref)
        if config.composition == "cumulative":
            working_img, working_lm = warped, warped_lm
        final_img, final_lm = warped, warped_lm
        delta = l2_distance(img, warped)
        try:
            resp = identify(oracle, warped, ledger)
        except OracleTransportError as exc:
            trace.append(TraceEntry(spec=spec, response=None, delta=delta, error=str(exc)))
            continue
        trace.append(TraceEntry(spec=spec, response=resp, delta=delta))
        outcome = _satisfies(resp, true_id, config.goal)
        if outcome is not None:
            status = outcome
            break

    return AttackOutcome(
        status=status,
        queries_used=ledger.used,
        trace=tuple(trace),
        final_image=final_img,
        final_landmarks=final_lm,
        final_delta=trace[-1].delta if trace else 0.0,
    )


def complexity_bound(n: int, d: int, k: int, xi_d: float, base_cost: float) -> float:
    """Dominant cost of the recursive decomposition: starting from blocks of
    size ``d``, each level multiplies cost by ``k * xi_d`` (branch factor
    times restarts per level), up to ``log_k(n / d)`` levels.

    ``n / d`` must be an integer power of ``k``.
    """
    if d < 1 or n < d:
        raise ValueError("need n >= d >= 1")
    if k < 2:
        raise ValueError("branch factor k must be at least 2")
    if xi_d <= 0:
        raise ValueError("restart count xi_d must be positive")
    if n % d != 0:
        raise ValueError(f"n/d must be an integer power of k, got n={n}, d={d}")
    q, levels = n // d, 0
    while q > 1:
        if q % k != 0:
            raise ValueError(f"n/d must be an integer power of k, got n/d={n // d}, k={k}")
        q //= k
        levels += 1
    return (k * xi_d) ** levels * base_cost
