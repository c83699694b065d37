"""File I/O: PNG images, pose/calibration ingestion, and the EPT1 tensor format.

Pose conventions
----------------
Every pose in the process is world->camera after ingestion. KITTI odometry
rows are row-major 3x4 camera->world matrices and get inverted on parse
(R = R_cw^T, t = -R_cw^T t_cw). The generic camera-config document carries a
`convention` tag ("world_to_camera", the default, or "camera_to_world").

Camera-config document (one `key: value` per line, `#` comments)::

    fx: 280.0
    fy: 280.0
    cx: 128.0
    cy: 128.0
    skew: 0.0                      # optional
    convention: camera_to_world    # optional, default world_to_camera
    R: r00 r01 r02 r10 r11 r12 r20 r21 r22   # optional, row-major 3x3
    t: tx ty tz                              # optional, requires R (and vice versa)

EPT1 tensor format (little-endian throughout)::

    bytes 0..3    magic "EPT1"
    byte  4       dtype tag (0 = float32)
    bytes 5..16   H, W, C as three uint32
    bytes 17..20  metadata length N as uint32
    bytes 21..    N bytes of UTF-8 JSON metadata (grid recipe, delta_t,
                  delta visualization mapping, lines drawn)
    then          H*W*C float32, row-major; file must end exactly there

Rotations read from text are re-orthonormalized (nearest rotation) when they
deviate from orthonormality by more than 1e-12 but at most 1e-4; beyond that
they are rejected. Real pose files carry rounding noise at ~1e-5.
"""

import json
import struct
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from PIL import Image, UnidentifiedImageError

from .encoder import EncodedPose, EncodeOptions, ImageBuffer
from .errors import (
    DecodeError,
    FormatError,
    InvalidRotation,
    MissingField,
    ParseError,
    UnsupportedBitDepth,
)
from .geometry import Extrinsic, Intrinsics, nearest_rotation
from .sampling import grid_from_metadata

EPT_MAGIC = b"EPT1"
EPT_DTYPE_FLOAT32 = 0
_HEADER = struct.Struct("<4sBIIII")

# Text-borne rotations: accept noise up to this, then project onto SO(3).
TEXT_ROTATION_TOL = 1e-4
# Below this deviation the matrix is already a rotation at double precision;
# skipping the projection keeps parsed exact matrices bit-identical.
PROJECTION_SKIP_TOL = 1e-12

WORLD_TO_CAMERA = "world_to_camera"
CAMERA_TO_WORLD = "camera_to_world"


@dataclass(frozen=True)
class PoseSequence:
    """Ordered frames of one trajectory, normalized to world->camera."""

    frames: Tuple[Extrinsic, ...]
    frame_ids: Tuple[int, ...]
    source_convention: str

    def __len__(self):
        return len(self.frames)


def _rotation_from_text(M, where):
    M = np.asarray(M, dtype=np.float64)
    dev = np.abs(M.T @ M - np.eye(3)).max()
    if dev > TEXT_ROTATION_TOL or np.linalg.det(M) < 0:
        raise InvalidRotation(
            f"{where}: rotation deviates from orthonormal by {dev:.3e} "
            f"(tol {TEXT_ROTATION_TOL:.0e})"
        )
    if dev > PROJECTION_SKIP_TOL:
        M = nearest_rotation(M)
    return M


def invert_pose(R, t):
    """Inverse rigid transform: (R, t) -> (R^T, -R^T t)."""
    R = np.asarray(R, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    return R.T, -R.T @ t


def to_world_to_camera(R, t, convention: str) -> Extrinsic:
    """Build a world->camera Extrinsic from a pose in either convention."""
    if convention == CAMERA_TO_WORLD:
        R, t = invert_pose(R, t)
    elif convention != WORLD_TO_CAMERA:
        raise ValueError(f"unknown convention {convention!r}")
    return Extrinsic(R, t)


# ---------------------------------------------------------------------------
# PNG


def read_png(path) -> ImageBuffer:
    """Decode an 8- or 16-bit PNG into floats scaled to [0, 1]."""
    try:
        with Image.open(path) as img:
            if img.format != "PNG":
                raise DecodeError(f"{path}: not a PNG file (format {img.format})")
            if img.mode == "P":
                img = img.convert("RGB")
            mode = img.mode
            arr = np.asarray(img)
    except UnidentifiedImageError as exc:
        raise DecodeError(f"{path}: {exc}") from exc
    except OSError as exc:
        raise DecodeError(f"{path}: {exc}") from exc

    if mode in ("L", "RGB", "RGBA"):
        peak = 255.0
    elif mode in ("I", "I;16"):
        peak = 65535.0
    else:
        raise UnsupportedBitDepth(f"{path}: unsupported PNG mode {mode!r}")
    data = arr.astype(np.float64) / peak
    if data.ndim == 2:
        data = data[:, :, None]
    return ImageBuffer(data)


def delta_visualization_mapping(delta_t: Optional[float]):
    """Affine map v -> offset + scale*v taking channel-4 values into [0, 1].

    Channel 4 holds {0, delta_t}; the map is symmetric around 0.5 so the sign
    of the scalar survives visualization. Identity-scale when delta_t is 0.
    """
    if delta_t is None:
        return None
    amp = abs(delta_t)
    scale = 0.5 / amp if amp > 0 else 1.0
    return {"offset": 0.5, "scale": scale}


def write_png(img, path) -> None:
    """Write a 1/3/4-channel image as an 8-bit PNG.

    Color channels are quantized from [0, 1]; a fourth channel is first taken
    to [0, 1] with delta_visualization_mapping and written as alpha.
    """
    buf = img if isinstance(img, ImageBuffer) else ImageBuffer(img)
    data = buf.data
    if buf.channels == 4:
        ch4 = data[:, :, 3]
        m = delta_visualization_mapping(float(np.abs(ch4).max()))
        mapped = np.clip(m["offset"] + m["scale"] * ch4, 0.0, 1.0)
        data = np.concatenate([data[:, :, :3], mapped[:, :, None]], axis=2)
    quant = np.clip(np.round(data * 255.0), 0, 255).astype(np.uint8)
    mode = {1: "L", 3: "RGB", 4: "RGBA"}[buf.channels]
    Image.fromarray(quant[:, :, 0] if mode == "L" else quant, mode).save(
        path, format="PNG"
    )


# ---------------------------------------------------------------------------
# KITTI odometry poses


def parse_kitti_poses(text: str) -> PoseSequence:
    """Parse KITTI odometry pose text: 12 reals per line, 3x4 camera->world."""
    frames = []
    ids = []
    index = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped:
            continue
        parts = stripped.split()
        if len(parts) != 12:
            raise ParseError(f"expected 12 values, got {len(parts)}", line=lineno)
        try:
            values = [float(p) for p in parts]
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from exc
        M = np.array(values, dtype=np.float64).reshape(3, 4)
        R_cw = _rotation_from_text(M[:, :3], f"line {lineno}")
        R, t = invert_pose(R_cw, M[:, 3])
        frames.append(Extrinsic(R, t))
        ids.append(index)
        index += 1
    return PoseSequence(tuple(frames), tuple(ids), CAMERA_TO_WORLD)


# ---------------------------------------------------------------------------
# Generic camera-config document


_FLOAT_KEYS = ("fx", "fy", "cx", "cy", "skew")


def _parse_floats(value, count, key, lineno):
    parts = value.split()
    if len(parts) != count:
        raise ParseError(
            f"field '{key}' expects {count} value(s), got {len(parts)}", line=lineno
        )
    try:
        return [float(p) for p in parts]
    except ValueError as exc:
        raise ParseError(f"field '{key}': {exc}", line=lineno) from exc


def parse_camera_config(text: str) -> Tuple[Intrinsics, Optional[Extrinsic]]:
    """Parse the documented key-value camera description.

    Returns the Intrinsics and, when R and t are both present, the pose
    converted to world->camera.
    """
    fields = {}
    lines = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].strip()
        if not stripped:
            continue
        if ":" not in stripped:
            raise ParseError("expected 'key: value'", line=lineno)
        key, value = (s.strip() for s in stripped.split(":", 1))
        if key in fields:
            raise ParseError(f"duplicate field '{key}'", line=lineno)
        if key in _FLOAT_KEYS:
            fields[key] = _parse_floats(value, 1, key, lineno)[0]
        elif key == "R":
            fields[key] = np.array(_parse_floats(value, 9, key, lineno)).reshape(3, 3)
        elif key == "t":
            fields[key] = np.array(_parse_floats(value, 3, key, lineno))
        elif key == "convention":
            if value not in (WORLD_TO_CAMERA, CAMERA_TO_WORLD):
                raise ParseError(f"unknown convention {value!r}", line=lineno)
            fields[key] = value
        else:
            raise ParseError(f"unknown field '{key}'", line=lineno)
        lines[key] = lineno

    for key in ("fx", "fy", "cx", "cy"):
        if key not in fields:
            raise MissingField(key)
    intr = Intrinsics(
        fx=fields["fx"],
        fy=fields["fy"],
        cx=fields["cx"],
        cy=fields["cy"],
        skew=fields.get("skew", 0.0),
    )

    pose = None
    if "R" in fields or "t" in fields:
        if "R" not in fields:
            raise MissingField("R", "pose has 't' but no 'R'")
        if "t" not in fields:
            raise MissingField("t", "pose has 'R' but no 't'")
        R = _rotation_from_text(fields["R"], f"line {lines['R']}")
        pose = to_world_to_camera(
            R, fields["t"], fields.get("convention", WORLD_TO_CAMERA)
        )
    return intr, pose


def format_camera_config(intr: Intrinsics, pose: Optional[Extrinsic] = None) -> str:
    """Render Intrinsics (and optionally a world->camera pose) as a document."""
    out = [
        f"fx: {float(intr.fx)!r}",
        f"fy: {float(intr.fy)!r}",
        f"cx: {float(intr.cx)!r}",
        f"cy: {float(intr.cy)!r}",
    ]
    if intr.skew != 0.0:
        out.append(f"skew: {float(intr.skew)!r}")
    if pose is not None:
        out.append(f"convention: {WORLD_TO_CAMERA}")
        out.append("R: " + " ".join(repr(float(v)) for v in pose.R.reshape(-1)))
        out.append("t: " + " ".join(repr(float(v)) for v in pose.t))
    return "\n".join(out) + "\n"


def rescale_intrinsics(intr: Intrinsics, old_hw, new_hw) -> Intrinsics:
    """Adjust intrinsics for a resize: x-quantities scale by W_new/W_old,
    y-quantities by H_new/H_old."""
    old_h, old_w = old_hw
    new_h, new_w = new_hw
    sx, sy = new_w / old_w, new_h / old_h
    return Intrinsics(
        fx=intr.fx * sx,
        fy=intr.fy * sy,
        cx=intr.cx * sx,
        cy=intr.cy * sy,
        skew=intr.skew * sx,
    )


# ---------------------------------------------------------------------------
# EPT1 tensor format


def _tensor_metadata(pose: EncodedPose) -> dict:
    opts = pose.options
    return {
        "grid": pose.grid.metadata(),
        "delta_t": pose.delta_t,
        "delta_mapping": delta_visualization_mapping(pose.delta_t),
        "lines_drawn": pose.lines_drawn,
        "options": None
        if opts is None
        else {
            "skip_background": opts.skip_background,
            "background_color": list(opts.background_color),
            "background_tolerance": opts.background_tolerance,
            "extended": opts.extended,
        },
    }


def write_tensor(pose: EncodedPose, path) -> None:
    """Serialize an EncodedPose as an EPT1 file (float32 payload + metadata)."""
    img = pose.image
    if img.channels not in (3, 4):
        raise ValueError(f"encoded pose must have 3 or 4 channels, got {img.channels}")
    payload = np.ascontiguousarray(img.data, dtype="<f4").tobytes()
    meta = json.dumps(
        _tensor_metadata(pose), sort_keys=True, separators=(",", ":")
    ).encode("utf-8")
    header = _HEADER.pack(
        EPT_MAGIC, EPT_DTYPE_FLOAT32, img.h, img.w, img.channels, len(meta)
    )
    with open(path, "wb") as f:
        f.write(header)
        f.write(meta)
        f.write(payload)


def read_tensor(path) -> EncodedPose:
    """Read an EPT1 file back into an EncodedPose (float32 image data)."""
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) < _HEADER.size:
        raise FormatError(f"{path}: truncated header ({len(blob)} bytes)")
    magic, dtype, h, w, c, meta_len = _HEADER.unpack_from(blob)
    if magic != EPT_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if dtype != EPT_DTYPE_FLOAT32:
        raise FormatError(f"{path}: unknown dtype tag {dtype}")
    if c not in (3, 4):
        raise FormatError(f"{path}: channel count {c} not in (3, 4)")
    offset = _HEADER.size + meta_len
    expected = offset + h * w * c * 4
    if len(blob) != expected:
        raise FormatError(
            f"{path}: payload length mismatch (file {len(blob)} bytes, "
            f"dims require {expected})"
        )
    try:
        meta = json.loads(blob[_HEADER.size : offset].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: bad metadata block: {exc}") from exc

    data = np.frombuffer(blob, dtype="<f4", offset=offset).reshape(h, w, c)
    try:
        image = ImageBuffer(np.ascontiguousarray(data))
        grid = grid_from_metadata(meta["grid"])
        opts_meta = meta.get("options")
        opts = None
        if opts_meta is not None:
            opts = EncodeOptions(
                skip_background=opts_meta["skip_background"],
                background_color=tuple(opts_meta["background_color"]),
                background_tolerance=opts_meta["background_tolerance"],
                extended=opts_meta["extended"],
            )
    except (KeyError, ValueError, TypeError) as exc:
        raise FormatError(f"{path}: invalid contents: {exc}") from exc
    return EncodedPose(
        image=image,
        grid=grid,
        delta_t=meta.get("delta_t"),
        options=opts,
        lines_drawn=meta.get("lines_drawn"),
    )
