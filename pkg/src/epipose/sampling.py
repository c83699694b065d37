"""Source-pixel sampling: the regular grid and the uniform-random alternative."""

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import BadGrid
from .geometry import Pixel

# RandomState (MT19937) streams are frozen by numpy's compatibility policy,
# which keeps random grids replayable across numpy upgrades.
GENERATOR_NAME = "numpy-mt19937"


@dataclass(frozen=True)
class SampleGrid:
    """Ordered, unique, in-bounds sample locations plus the recipe that made them.

    mode is "regular" (params: r) or "random" (params: fraction, seed,
    generator). The coordinate order is the drawing order downstream.
    """

    coords: Tuple[Pixel, ...]
    mode: str
    params: dict
    h: int
    w: int

    def __post_init__(self):
        if self.mode not in ("regular", "random"):
            raise ValueError(f"unknown grid mode {self.mode!r}")
        seen = set()
        for p in self.coords:
            if not (0 <= p.x < self.w and 0 <= p.y < self.h):
                raise ValueError(f"sample {p} out of bounds for {self.h}x{self.w}")
            if p in seen:
                raise ValueError(f"duplicate sample {p}")
            seen.add(p)

    def metadata(self):
        """JSON-ready description, sufficient to regenerate the grid."""
        return {"mode": self.mode, "h": self.h, "w": self.w, **self.params}


def grid_samples(H: int, W: int, r: int) -> SampleGrid:
    """Regular r x r grid with spacing floor(H/r), floor(W/r), row-major order.

    Grid positions are 1-based multiples of the spacing, shifted to 0-based
    pixel indices, so all r*r samples are in-bounds.
    """
    if r < 1 or r > min(H, W):
        raise BadGrid(f"r = {r} outside [1, min(H, W) = {min(H, W)}]")
    sy, sx = H // r, W // r
    coords = tuple(
        Pixel(k * sx - 1, j * sy - 1)
        for j in range(1, r + 1)
        for k in range(1, r + 1)
    )
    return SampleGrid(coords, "regular", {"r": r}, H, W)


def random_samples(H: int, W: int, fraction: float, seed: int) -> SampleGrid:
    """floor(fraction*H*W) pixels drawn uniformly without replacement.

    Reproducible from the seed; the generator name is recorded so outputs
    can be replayed.
    """
    if not 0.0 < fraction <= 1.0:
        raise BadGrid(f"fraction = {fraction} outside (0, 1]")
    n = min(math.floor(fraction * H * W), H * W)
    rng = np.random.RandomState(seed)
    flat = rng.choice(H * W, size=n, replace=False)
    coords = tuple(Pixel(int(i % W), int(i // W)) for i in flat)
    params = {"fraction": fraction, "seed": int(seed), "generator": GENERATOR_NAME}
    return SampleGrid(coords, "random", params, H, W)


def grid_from_metadata(meta: dict) -> SampleGrid:
    """Rebuild a SampleGrid from the dict produced by SampleGrid.metadata()."""
    mode = meta.get("mode")
    if mode == "regular":
        return grid_samples(meta["h"], meta["w"], meta["r"])
    if mode == "random":
        return random_samples(meta["h"], meta["w"], meta["fraction"], meta["seed"])
    raise ValueError(f"unknown grid mode {mode!r}")
