"""Float32 array bindings to the epipose encoder and losses.

Training pipelines hand images in as contiguous row-major float32 arrays
and get the same back. Conforming inputs are ingested without a copy;
anything else is converted with one explicit copy. Outputs are bitwise
identical (as float32) to what the `epipose` CLI writes into EPT1 tensors
for the same inputs.

Errors surface as the typed epipose exceptions (DegenerateMotion, BadGrid,
ShapeMismatch, ...); argument-shape problems raise ShapeError naming the
offending argument.
"""

import numpy as np

import epipose
from epipose import (
    EncodeOptions,
    Extrinsic,
    ImageBuffer,
    Intrinsics,
    encode,
    fundamental_matrix,
    gaussian_kernel,
    grid_samples,
    random_samples,
    relative_motion,
    total_loss,
)

__version__ = "0.1.0"

__all__ = ["ShapeError", "py_encode", "py_losses", "version"]


class ShapeError(ValueError):
    """An argument does not have the required array shape."""

    def __init__(self, argument, expected, got):
        super().__init__(f"{argument}: expected shape {expected}, got {got}")
        self.argument = argument


def version():
    """Bridge and core library versions."""
    return {"bridge": __version__, "core": epipose.__version__}


def _ingest(array, argument, shape=None, ndim=None):
    """float32 view of `array`; zero-copy when already float32 C-contiguous."""
    arr = np.asarray(array)
    if shape is not None and arr.shape != shape:
        raise ShapeError(argument, shape, arr.shape)
    if ndim is not None and (arr.ndim != ndim or arr.shape[-1] != 3):
        raise ShapeError(argument, "(H, W, 3)", arr.shape)
    if arr.dtype == np.float32 and arr.flags.c_contiguous:
        return arr
    return np.ascontiguousarray(arr, dtype=np.float32)


def _intrinsics_from_matrix(K, argument):
    K = np.asarray(K, dtype=np.float64)
    if K.shape != (3, 3):
        raise ShapeError(argument, (3, 3), K.shape)
    if K[1, 0] != 0 or K[2, 0] != 0 or K[2, 1] != 0 or K[2, 2] != 1.0:
        raise ValueError(f"{argument} is not an upper-triangular calibration matrix")
    return Intrinsics(fx=K[0, 0], fy=K[1, 1], cx=K[0, 2], cy=K[1, 2], skew=K[0, 1])


def _vector3(v, argument):
    arr = np.asarray(v, dtype=np.float64).reshape(-1)
    if arr.shape != (3,):
        raise ShapeError(argument, (3,), np.asarray(v).shape)
    return arr


def _matrix3(m, argument):
    arr = np.asarray(m, dtype=np.float64)
    if arr.shape != (3, 3):
        raise ShapeError(argument, (3, 3), arr.shape)
    return arr


def _build_grid(grid_params, h, w):
    params = dict(grid_params)
    mode = params.pop("mode", "regular")
    if mode == "regular":
        return grid_samples(h, w, params["r"])
    if mode == "random":
        return random_samples(h, w, params["fraction"], params["seed"])
    raise ValueError(f"unknown grid mode {mode!r}")


def _build_options(options):
    if options is None:
        return EncodeOptions()
    if isinstance(options, EncodeOptions):
        return options
    return EncodeOptions(**options)


def py_encode(source_array, K_s, K_t, R_s, t_s, R_t, t_t, grid_params, options=None):
    """Encode the relative pose between two views as an epipolar-line image.

    source_array is (H, W, 3) float32 in [0, 1]; K are 3x3 calibration
    matrices (K_t may be None to reuse K_s); R, t are world->camera poses.
    grid_params is {"mode": "regular", "r": N} or {"mode": "random",
    "fraction": F, "seed": S}. Returns (H, W, 3) float32, or (H, W, 4) when
    options request the extended channel.
    """
    src = _ingest(source_array, "source_array", ndim=3)
    K_s = _intrinsics_from_matrix(K_s, "K_s")
    K_t = None if K_t is None else _intrinsics_from_matrix(K_t, "K_t")
    src_pose = Extrinsic(_matrix3(R_s, "R_s"), _vector3(t_s, "t_s"))
    tgt_pose = Extrinsic(_matrix3(R_t, "R_t"), _vector3(t_t, "t_t"))

    rel = relative_motion(src_pose, tgt_pose)
    F = fundamental_matrix(K_s, K_t, rel)
    h, w = src.shape[:2]
    grid = _build_grid(grid_params, h, w)
    encoded = encode(
        ImageBuffer(src),
        F,
        grid,
        _build_options(options),
        t_s=src_pose.t,
        t_t=tgt_pose.t,
    )
    return np.ascontiguousarray(encoded.image.data, dtype=np.float32)


def py_losses(pred_array, target_array, lam=1.0, k_s=5):
    """L1, spectral, and total loss between two (H, W, C) float32 images."""
    pred = _ingest(pred_array, "pred_array")
    target = _ingest(target_array, "target_array")
    report = total_loss(pred, target, lam, gaussian_kernel(k_s))
    return {"l1": report.l1, "spectral": report.spectral, "total": report.total}
