"""Relative camera pose encoding as colored epipolar-line images.

The pipeline: build the fundamental matrix between two calibrated views,
sample source pixels on a grid, clip and rasterize each sampled pixel's
epipolar line, and paint it with the source pixel's color. The package also
ships the Gaussian low/high-frequency training loss and MAE/SSIM/PSNR
scoring used to evaluate view synthesis against this encoding.
"""

from .encoder import (
    EncodedPose,
    EncodeOptions,
    ImageBuffer,
    encode,
    encode_extended,
    extended_delta,
)
from .errors import (
    BadGrid,
    BadKernel,
    DecodeError,
    DegenerateLine,
    DegenerateMotion,
    EmptyEncodingWarning,
    EpiposeError,
    FormatError,
    ImageTooSmall,
    InvalidRotation,
    MissingField,
    ParseError,
    ShapeMismatch,
    UnsupportedBitDepth,
)
from .geometry import (
    Extrinsic,
    FundamentalMatrix,
    Intrinsics,
    Pixel,
    RelativeMotion,
    epipolar_line,
    fundamental_matrix,
    relative_motion,
    skew,
)
from .io import (
    PoseSequence,
    parse_camera_config,
    parse_kitti_poses,
    read_png,
    read_tensor,
    rescale_intrinsics,
    write_png,
    write_tensor,
)
from .metrics import MetricReport, mae, metric_report, psnr, ssim
from .raster import LineSegment, clip_line, rasterize
from .sampling import SampleGrid, grid_samples, random_samples
from .spectral import (
    GaussianKernel,
    LossReport,
    decompose,
    gaussian_kernel,
    spectral_loss,
    total_loss,
)

__version__ = "0.1.0"

__all__ = [
    "BadGrid",
    "BadKernel",
    "DecodeError",
    "DegenerateLine",
    "DegenerateMotion",
    "EmptyEncodingWarning",
    "EncodedPose",
    "EncodeOptions",
    "EpiposeError",
    "Extrinsic",
    "FormatError",
    "FundamentalMatrix",
    "GaussianKernel",
    "ImageBuffer",
    "ImageTooSmall",
    "Intrinsics",
    "InvalidRotation",
    "LineSegment",
    "LossReport",
    "MetricReport",
    "MissingField",
    "ParseError",
    "Pixel",
    "PoseSequence",
    "RelativeMotion",
    "SampleGrid",
    "ShapeMismatch",
    "UnsupportedBitDepth",
    "clip_line",
    "decompose",
    "encode",
    "encode_extended",
    "epipolar_line",
    "extended_delta",
    "fundamental_matrix",
    "gaussian_kernel",
    "grid_samples",
    "mae",
    "metric_report",
    "parse_camera_config",
    "parse_kitti_poses",
    "psnr",
    "random_samples",
    "rasterize",
    "read_png",
    "read_tensor",
    "relative_motion",
    "rescale_intrinsics",
    "skew",
    "spectral_loss",
    "ssim",
    "total_loss",
    "write_png",
    "write_tensor",
]
