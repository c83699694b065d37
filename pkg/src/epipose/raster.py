"""Clip an infinite line to the image rectangle and enumerate its pixel set.

The image rectangle is [-0.5, W-0.5] x [-0.5, H-0.5] (pixel centers at
integer coordinates). Rasterization emits one pixel per integer step along
the major axis, minor coordinate rounded to nearest; every emitted pixel
center lies within perpendicular distance sqrt(2)/2 of the line.
"""

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .errors import DegenerateLine
from .geometry import DEGENERATE_TOL, Pixel


@dataclass(frozen=True)
class LineSegment:
    """Sub-pixel chord of a line across the image rectangle."""

    x0: float
    y0: float
    x1: float
    y1: float
    line: Tuple[float, float, float]
    h: int
    w: int


def clip_line(line, h: int, w: int) -> Optional[LineSegment]:
    """Intersect {a*x + b*y + c = 0} with the image rectangle, or None if they miss."""
    a, b, c = (float(v) for v in line)
    if abs(a) + abs(b) <= DEGENERATE_TOL:
        raise DegenerateLine(f"line ({a}, {b}, {c}) has no finite direction")

    # Parametric form p(t) = p0 + t*d with p0 the closest point to the origin
    # and d along the line; slab-clip t against both axis ranges.
    n2 = a * a + b * b
    px, py = -a * c / n2, -b * c / n2
    dx, dy = b, -a

    tmin, tmax = -math.inf, math.inf
    for p, d, lo, hi in ((px, dx, -0.5, w - 0.5), (py, dy, -0.5, h - 0.5)):
        if d == 0.0:
            if not lo <= p <= hi:
                return None
        else:
            t0, t1 = (lo - p) / d, (hi - p) / d
            if t0 > t1:
                t0, t1 = t1, t0
            tmin, tmax = max(tmin, t0), min(tmax, t1)
    if tmin > tmax:
        return None

    # Clamp: rounding in px + t*dx may drift an endpoint past the boundary.
    x0 = min(max(px + tmin * dx, -0.5), w - 0.5)
    y0 = min(max(py + tmin * dy, -0.5), h - 0.5)
    x1 = min(max(px + tmax * dx, -0.5), w - 0.5)
    y1 = min(max(py + tmax * dy, -0.5), h - 0.5)
    return LineSegment(x0, y0, x1, y1, (a, b, c), h, w)


def _rasterize_arrays(seg: LineSegment):
    """(xs, ys) int arrays of the segment's pixels, ordered by major coordinate."""
    x0, y0, x1, y1 = seg.x0, seg.y0, seg.x1, seg.y1
    x_major = abs(x1 - x0) >= abs(y1 - y0)
    if x_major:
        m0, m1, n0, n1, mhi, nhi = x0, x1, y0, y1, seg.w - 1, seg.h - 1
    else:
        m0, m1, n0, n1, mhi, nhi = y0, y1, x0, x1, seg.h - 1, seg.w - 1
    if m0 > m1:
        m0, m1, n0, n1 = m1, m0, n1, n0

    lo, hi = math.ceil(m0), math.floor(m1)
    if lo > hi:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    major = np.arange(lo, hi + 1, dtype=np.int64)
    if m1 > m0:
        frac = (major - m0) / (m1 - m0)
    else:
        frac = np.zeros(major.shape)
    minor_exact = n0 + frac * (n1 - n0)
    # Round half up, then clamp: a minor value of exactly nhi + 0.5 (pixel
    # boundary) must still land in-bounds.
    minor = np.clip(np.floor(minor_exact + 0.5).astype(np.int64), 0, nhi)
    major = np.clip(major, 0, mhi)
    if x_major:
        return major, minor
    return minor, major


def rasterize(seg: LineSegment) -> List[Pixel]:
    """One pixel per integer step along the major axis, minor rounded to nearest."""
    xs, ys = _rasterize_arrays(seg)
    return [Pixel(int(x), int(y)) for x, y in zip(xs, ys)]
