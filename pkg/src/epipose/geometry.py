"""Pinhole camera types, rigid-motion algebra, and fundamental-matrix construction.

Conventions used throughout the package:

* extrinsics are world->camera, ``x_cam = R @ x_world + t``;
* pixels are (x, y) with x the column and y the row, 0-based, pixel centers
  at integer coordinates;
* homogeneous pixel vectors are (x, y, 1);
* all arithmetic is double precision.
"""

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import DegenerateLine, DegenerateMotion, InvalidRotation

# Rotation orthonormality / determinant tolerance (double precision inputs).
ROTATION_TOL = 1e-6
# rank(F) <= 2 tested as sigma3/sigma1 against this ratio.
RANK_RATIO_TOL = 1e-7
# Below this translation norm the fundamental matrix would vanish.
DEGENERATE_TOL = 1e-12


def _as_matrix3(value, name):
    m = np.array(value, dtype=np.float64)
    if m.shape != (3, 3):
        raise ValueError(f"{name} must be 3x3, got shape {m.shape}")
    return m


def _as_vector3(value, name):
    v = np.array(value, dtype=np.float64).reshape(-1)
    if v.shape != (3,):
        raise ValueError(f"{name} must be a 3-vector, got shape {v.shape}")
    return v


def check_rotation(R, tol=ROTATION_TOL, name="R"):
    """Validate that R is a rotation matrix within `tol`; returns R as float64."""
    R = _as_matrix3(R, name)
    if not np.all(np.isfinite(R)):
        raise InvalidRotation(f"{name} contains non-finite entries")
    dev = np.abs(R.T @ R - np.eye(3)).max()
    if dev > tol:
        raise InvalidRotation(
            f"{name}^T {name} deviates from identity by {dev:.3e} (tol {tol:.0e})"
        )
    det = float(np.linalg.det(R))
    if abs(det - 1.0) > tol:
        raise InvalidRotation(f"det({name}) = {det!r}, expected 1 within {tol:.0e}")
    return R


def nearest_rotation(M):
    """Project a near-rotation onto SO(3) (closest in Frobenius norm)."""
    U, _, Vt = np.linalg.svd(np.asarray(M, dtype=np.float64))
    R = U @ Vt
    if np.linalg.det(R) < 0:
        R = U @ np.diag([1.0, 1.0, -1.0]) @ Vt
    return R


class Pixel(NamedTuple):
    """Image location: x is the column, y is the row (0-based)."""

    x: int
    y: int


@dataclass(frozen=True)
class Intrinsics:
    """Pinhole calibration: focal lengths and principal point in pixels."""

    fx: float
    fy: float
    cx: float
    cy: float
    skew: float = 0.0

    def __post_init__(self):
        for field in ("fx", "fy", "cx", "cy", "skew"):
            if not np.isfinite(getattr(self, field)):
                raise ValueError(f"{field} must be finite")
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")

    @property
    def matrix(self):
        """The assembled 3x3 calibration matrix K."""
        return np.array(
            [
                [self.fx, self.skew, self.cx],
                [0.0, self.fy, self.cy],
                [0.0, 0.0, 1.0],
            ]
        )

    def inverse(self):
        return np.linalg.inv(self.matrix)


@dataclass(frozen=True)
class Extrinsic:
    """World->camera rigid pose: x_cam = R @ x_world + t."""

    R: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        R = check_rotation(self.R)
        t = _as_vector3(self.t, "t")
        if not np.all(np.isfinite(t)):
            raise ValueError("t must be finite")
        R.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "t", t)

    def camera_center(self):
        """Camera center in world coordinates, -R^T t."""
        return -self.R.T @ self.t


@dataclass(frozen=True)
class RelativeMotion:
    """Rigid motion taking source-camera coordinates into target-camera ones."""

    R: np.ndarray
    T: np.ndarray

    def __post_init__(self):
        R = check_rotation(self.R)
        T = _as_vector3(self.T, "T")
        if not np.all(np.isfinite(T)):
            raise ValueError("T must be finite")
        R.setflags(write=False)
        T.setflags(write=False)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "T", T)


@dataclass(frozen=True)
class FundamentalMatrix:
    """3x3 rank-2 matrix mapping a source pixel to its epipolar line."""

    F: np.ndarray

    def __post_init__(self):
        F = _as_matrix3(self.F, "F")
        if not np.all(np.isfinite(F)):
            raise ValueError("F must be finite")
        s = np.linalg.svd(F, compute_uv=False)
        if s[0] > 0 and s[2] / s[0] > RANK_RATIO_TOL:
            raise ValueError(
                f"F is not rank-deficient: sigma3/sigma1 = {s[2] / s[0]:.3e}"
            )
        F.setflags(write=False)
        object.__setattr__(self, "F", F)


def skew(v):
    """Cross-product matrix of v: skew(v) @ w == cross(v, w)."""
    x, y, z = _as_vector3(v, "v")
    return np.array(
        [
            [0.0, -z, y],
            [z, 0.0, -x],
            [-y, x, 0.0],
        ]
    )


def relative_motion(src: Extrinsic, tgt: Extrinsic) -> RelativeMotion:
    """Relative rigid motion between two extrinsics: R = R_t R_s^T, T = t_t - R t_s."""
    R = tgt.R @ src.R.T
    T = tgt.t - R @ src.t
    return RelativeMotion(R, T)


def fundamental_matrix(
    K_s: Intrinsics, K_t: Optional[Intrinsics], rel: RelativeMotion
) -> FundamentalMatrix:
    """Fundamental matrix F = K_t^-T [T]_x R K_s^-1.

    Pass K_t=None to reuse K_s (the single-calibration special case).
    Raises DegenerateMotion when the translation is numerically zero, since
    F would be identically zero and no epipolar geometry exists.
    """
    if K_t is None:
        K_t = K_s
    if np.linalg.norm(rel.T) < DEGENERATE_TOL:
        raise DegenerateMotion(
            f"translation norm {np.linalg.norm(rel.T):.3e} below {DEGENERATE_TOL:.0e}"
        )
    F = K_t.inverse().T @ skew(rel.T) @ rel.R @ K_s.inverse()
    return FundamentalMatrix(F)


def epipolar_line(F: FundamentalMatrix, p_s) -> np.ndarray:
    """Line coefficients (a, b, c) of the epipolar line F @ (x, y, 1)."""
    x, y = p_s
    line = F.F @ np.array([float(x), float(y), 1.0])
    if abs(line[0]) + abs(line[1]) <= DEGENERATE_TOL:
        raise DegenerateLine(f"line {tuple(line)} has no finite direction")
    return line
