"""Planar fixed-point bookkeeping: displacement winding, alternating-trace
residuals for quotient-map iterates, and nonnegative-trace scans.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import FixedPointOnCircle, SamplingTooCoarse

#: adjacent displacement directions may differ by at most this angle before
#: the winding count becomes uncertifiable
_MAX_STEP = math.pi / 2.0


@dataclass(frozen=True)
class PlanarMapSample:
    """Images of a circle of radius eps around an isolated fixed point."""

    points: np.ndarray     # (N, 2) samples on the circle
    images: np.ndarray     # (N, 2) their images
    center: tuple = (0.0, 0.0)
    eps: float = 1.0

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        ims = np.asarray(self.images, dtype=float)
        if pts.shape != ims.shape or pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError(f"bad sample shapes {pts.shape} vs {ims.shape}")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "images", ims)

    @classmethod
    def from_map(cls, f: Callable, center=(0.0, 0.0), eps: float = 1e-3,
                 n_samples: int = 64) -> "PlanarMapSample":
        ts = np.linspace(0.0, 2.0 * math.pi, n_samples, endpoint=False)
        pts = np.column_stack([center[0] + eps * np.cos(ts),
                               center[1] + eps * np.sin(ts)])
        ims = np.array([f(p) for p in pts], dtype=float)
        return cls(points=pts, images=ims, center=tuple(center), eps=eps)

    @classmethod
    def from_csv_rows(cls, rows: Sequence[Sequence[float]], center=(0.0, 0.0),
                      eps: float = 1.0) -> "PlanarMapSample":
        arr = np.asarray([[float(v) for v in row] for row in rows])
        return cls(points=arr[:, :2], images=arr[:, 2:4], center=center, eps=eps)


def _winding(points: np.ndarray, images: np.ndarray, eps: float) -> int:
    disp = images - points
    norms = np.hypot(disp[:, 0], disp[:, 1])
    if np.any(norms <= 1e-14 * max(1.0, eps)):
        raise FixedPointOnCircle("the map fixes a sampled circle point")
    ang = np.arctan2(disp[:, 1], disp[:, 0])
    closed = np.append(ang, ang[0])
    steps = np.diff(closed)
    steps = (steps + math.pi) % (2.0 * math.pi) - math.pi
    if np.any(np.abs(steps) >= _MAX_STEP):
        raise SamplingTooCoarse(
            f"displacement direction jumps by {float(np.abs(steps).max()):.3f} rad"
        )
    total = float(steps.sum())
    return int(round(total / (2.0 * math.pi)))


def brouwer_index(sample: PlanarMapSample) -> int:
    """Winding number of y -> (f(y) - y) / |f(y) - y| around the circle.

    Certified integer: every angular increment is under a quarter turn, so
    the lift is unambiguous.  Raises SamplingTooCoarse otherwise (use
    brouwer_index_of_map for adaptive refinement).
    """
    return _winding(sample.points, sample.images, sample.eps)


def brouwer_index_of_map(f: Callable, center=(0.0, 0.0), eps: float = 1e-3,
                         n_samples: int = 64, max_doublings: int = 12) -> int:
    """Adaptive version: doubles the sample count until the winding certifies."""
    n = n_samples
    for _ in range(max_doublings):
        try:
            return brouwer_index(PlanarMapSample.from_map(f, center, eps, n))
        except SamplingTooCoarse:
            n *= 2
    raise SamplingTooCoarse(f"no certified winding after {n} samples")


@dataclass(frozen=True)
class LefschetzReport:
    residuals: tuple        # per m, trace alternation minus index sum
    max_abs_residual: float

    @property
    def ok(self) -> bool:
        return self.max_abs_residual <= 1e-9

    def to_json(self) -> dict:
        return {"residuals": list(self.residuals),
                "max_abs_residual": self.max_abs_residual, "ok": self.ok}


def lefschetz_residuals(induced_maps: Sequence,
                        fixed_point_indices: Sequence,
                        m_max: int = 10) -> LefschetzReport:
    """Residual of the alternating trace identity for iterates m = 1..m_max.

    induced_maps gives the data on degrees 0, 1, 2 of the quotient pair: a
    matrix (traces of its powers are used), a number (constant declared
    trace for every m), a callable m -> trace, or an empty matrix/None for a
    vanishing degree.  fixed_point_indices holds one integer or callable
    m -> integer per fixed point of the quotient map.  Declared trace data
    need not be realizable by a matrix; the residual just reports the
    bookkeeping of the identity.
    """
    def trace_fn(entry):
        if entry is None:
            return lambda m: 0.0
        if callable(entry):
            return lambda m: float(entry(m))
        if isinstance(entry, (int, float)):
            return lambda m: float(entry)
        M = np.atleast_2d(np.asarray(entry, dtype=float))
        if M.size == 0:
            return lambda m: 0.0
        return lambda m: float(np.trace(np.linalg.matrix_power(M, m)))

    fns = [trace_fn(e) for e in induced_maps]
    while len(fns) < 3:
        fns.append(lambda m: 0.0)
    residuals = []
    for m in range(1, m_max + 1):
        alt = sum((-1) ** deg * fn(m) for deg, fn in enumerate(fns[:3]))
        idx_sum = sum(float(idx(m)) if callable(idx) else float(idx)
                      for idx in fixed_point_indices)
        residuals.append(alt - idx_sum)
    return LefschetzReport(residuals=tuple(residuals),
                           max_abs_residual=float(np.max(np.abs(residuals))))


@dataclass(frozen=True)
class TraceScan:
    count: int            # how many m in 1..m_max have trace(L^m) >= 0
    first_hits: tuple     # the first few such m
    m_max: int

    def to_json(self) -> dict:
        return {"count": self.count, "first_hits": list(self.first_hits),
                "m_max": self.m_max}


def trace_nonneg_scan(L: np.ndarray, m_max: int = 1000,
                      keep: int = 10) -> TraceScan:
    """Scan trace(L^m) >= 0 for m = 1..m_max.

    Every real matrix has infinitely many such m; the scan exhibits them at
    desk scale (the heuristic floor count >= m_max / (2 dim) is reported by
    callers, not asserted here).
    """
    L = np.atleast_2d(np.asarray(L, dtype=float))
    # the sign of trace(L^m) is invariant under positive scaling; normalize by
    # the spectral radius so long scans neither overflow nor underflow
    radius = float(np.max(np.abs(np.linalg.eigvals(L)))) if L.size else 0.0
    if radius > 1.0:
        L = L / radius
    hits = []
    count = 0
    P = np.eye(L.shape[0])
    for m in range(1, m_max + 1):
        P = P @ L
        if float(np.trace(P)) >= 0.0:
            count += 1
            if len(hits) < keep:
                hits.append(m)
    return TraceScan(count=count, first_hits=tuple(hits), m_max=m_max)
