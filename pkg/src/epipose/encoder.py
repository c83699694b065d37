"""Build the encoded relative pose image: colored epipolar lines, one per sample.

The output starts as zeros; for every sampled source pixel, in grid order,
the rasterized epipolar line is painted with that pixel's RGB color. Later
lines overwrite earlier ones, so drawing order is part of the contract
(grid order is row-major, which keeps outputs bit-reproducible).

The extended variant adds a fourth channel that broadcasts a signed scalar
summarizing the dominant translation change onto every drawn pixel.
"""

import dataclasses
import warnings
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import DegenerateLine, EmptyEncodingWarning
from .geometry import FundamentalMatrix, epipolar_line
from .raster import _rasterize_arrays, clip_line
from .sampling import SampleGrid


@dataclass(frozen=True)
class ImageBuffer:
    """H x W x C float image; color channels in [0, 1], channel 4 unbounded.

    The wrapped array is shared, not copied; treat it as immutable.
    """

    data: np.ndarray

    def __post_init__(self):
        data = self.data
        if not isinstance(data, np.ndarray):
            data = np.asarray(data, dtype=np.float64)
            object.__setattr__(self, "data", data)
        if data.ndim != 3 or data.shape[2] not in (1, 3, 4):
            raise ValueError(f"expected (H, W, C) with C in 1/3/4, got {data.shape}")
        if not np.issubdtype(data.dtype, np.floating):
            raise ValueError(f"expected float image, got dtype {data.dtype}")
        color = data[:, :, : min(data.shape[2], 3)]
        if not np.all(np.isfinite(data)):
            raise ValueError("image contains non-finite values")
        if color.size and (color.min() < 0.0 or color.max() > 1.0):
            raise ValueError("color channels must lie in [0, 1]")

    @property
    def h(self) -> int:
        return self.data.shape[0]

    @property
    def w(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class EncodeOptions:
    """Background filtering and extended-channel switches."""

    skip_background: bool = False
    background_color: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    background_tolerance: float = 0.0
    extended: bool = False

    def __post_init__(self):
        if self.background_tolerance < 0:
            raise ValueError("background_tolerance must be >= 0")


@dataclass(frozen=True)
class EncodedPose:
    """The encoded relative pose image plus the recipe that produced it."""

    image: ImageBuffer
    grid: SampleGrid
    delta_t: Optional[float] = None
    options: Optional[EncodeOptions] = None
    lines_drawn: Optional[int] = None
    # Index into grid.coords of the line that last painted each pixel, -1
    # where untouched. Populated only when encode(keep_writers=True).
    writers: Optional[np.ndarray] = None


def extended_delta(t_s, t_t) -> float:
    """Signed dominant component of |t_t| - |t_s| (componentwise absolutes).

    The sign distinguishes forward from backward motion along the dominant
    axis; ties on the magnitude go to the lowest axis index. Note the
    componentwise absolutes make the sign relative to the scene origin.
    """
    t_s = np.asarray(t_s, dtype=np.float64).reshape(3)
    t_t = np.asarray(t_t, dtype=np.float64).reshape(3)
    delta = np.abs(t_t) - np.abs(t_s)
    t_m = delta[int(np.argmax(np.abs(delta)))]
    return float(np.sign(t_m) * abs(t_m))


def encode(
    source: ImageBuffer,
    F: FundamentalMatrix,
    grid: SampleGrid,
    opts: EncodeOptions = EncodeOptions(),
    t_s=None,
    t_t=None,
    keep_writers: bool = False,
) -> EncodedPose:
    """Paint one colored epipolar line per sampled source pixel.

    Sampled pixels whose color is within `background_tolerance` of
    `background_color` are skipped when `skip_background` is set. Lines that
    are degenerate (a sample on the epipole) or miss the image contribute
    nothing. With `opts.extended`, t_s and t_t are required and a fourth
    channel carries the translation scalar on every drawn pixel.
    """
    src = source if isinstance(source, ImageBuffer) else ImageBuffer(source)
    if src.channels != 3:
        raise ValueError(f"source must be 3-channel, got {src.channels}")
    if (grid.h, grid.w) != (src.h, src.w):
        raise ValueError(
            f"grid built for {grid.h}x{grid.w}, image is {src.h}x{src.w}"
        )
    if opts.extended and (t_s is None or t_t is None):
        raise ValueError("extended encoding requires t_s and t_t")

    h, w = src.h, src.w
    out = np.zeros((h, w, 3), dtype=np.float64)
    writers = np.full((h, w), -1, dtype=np.int64) if keep_writers else None
    bg = np.asarray(opts.background_color, dtype=np.float64)
    data = src.data
    lines_drawn = 0

    for idx, p in enumerate(grid.coords):
        color = data[p.y, p.x].astype(np.float64)
        if opts.skip_background and np.all(
            np.abs(color - bg) <= opts.background_tolerance
        ):
            continue
        try:
            line = epipolar_line(F, p)
        except DegenerateLine:
            continue
        seg = clip_line(line, h, w)
        if seg is None:
            continue
        xs, ys = _rasterize_arrays(seg)
        if xs.size == 0:
            continue
        out[ys, xs] = color
        if writers is not None:
            writers[ys, xs] = idx
        lines_drawn += 1

    if lines_drawn == 0:
        warnings.warn(
            "no epipolar line was drawn (all samples background or off-image)",
            EmptyEncodingWarning,
            stacklevel=2,
        )

    delta = None
    if opts.extended:
        delta = extended_delta(t_s, t_t)
        ch4 = np.where(out.max(axis=2) > 0.0, delta, 0.0)
        out = np.concatenate([out, ch4[:, :, None]], axis=2)

    return EncodedPose(
        image=ImageBuffer(out),
        grid=grid,
        delta_t=delta,
        options=opts,
        lines_drawn=lines_drawn,
        writers=writers,
    )


def encode_extended(
    source: ImageBuffer,
    F: FundamentalMatrix,
    grid: SampleGrid,
    opts: EncodeOptions,
    t_s,
    t_t,
    keep_writers: bool = False,
) -> EncodedPose:
    """Four-channel encoding: RGB as encode(), channel 4 carrying the scalar."""
    if not opts.extended:
        opts = dataclasses.replace(opts, extended=True)
    return encode(source, F, grid, opts, t_s=t_s, t_t=t_t, keep_writers=keep_writers)
