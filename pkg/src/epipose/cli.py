"""Command-line pipeline driver.

Subcommands: encode one pair, batch a sequence, self-check a produced tensor,
and score image pairs (loss / metrics). Exit codes: 0 success, 1 usage,
2 data/parse error, 3 degenerate geometry, 4 verification failure.

Set EPIPOSE_LOG=DEBUG|INFO|WARNING to control verbosity.
"""

import argparse
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Tuple

import numpy as np

from . import io as fileio
from .encoder import EncodeOptions, EncodedPose, encode
from .errors import (
    DegenerateLine,
    DegenerateMotion,
    EpiposeError,
    MissingField,
)
from .geometry import Extrinsic, Intrinsics, fundamental_matrix, relative_motion
from .metrics import metric_report
from .sampling import SampleGrid, grid_samples, random_samples
from .spectral import DEFAULT_KERNEL_SIZE, DEFAULT_LAMBDA, gaussian_kernel, total_loss

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_DEGENERATE = 3
EXIT_VERIFY = 4

MAX_PIXEL_DISTANCE = math.sqrt(2.0) / 2.0

log = logging.getLogger("epipose")


class UsageError(Exception):
    """Bad flag combination or inconsistent inputs; maps to exit code 1."""


@dataclass(frozen=True)
class JobSpec:
    """Resolved batch job: inputs, pairing rule, encode recipe, output layout."""

    dataset_kind: str
    seq: str
    images: Tuple[Path, ...]
    poses: Tuple[Extrinsic, ...]
    intrinsics: Tuple[Intrinsics, ...]
    max_gap: int
    grid_args: dict
    options: EncodeOptions
    out_dir: Path
    workers: int
    write_png: bool

    def __post_init__(self):
        if self.max_gap < 1:
            raise UsageError("--max-gap must be >= 1")
        if self.workers < 1:
            raise UsageError("--workers must be >= 1")
        if len(self.images) != len(self.poses):
            raise UsageError(f"{len(self.images)} images but {len(self.poses)} poses")

    def pairs(self):
        n = len(self.images)
        for s in range(n):
            for t in range(n):
                if s != t and abs(s - t) <= self.max_gap:
                    yield s, t


# ---------------------------------------------------------------------------
# input loading helpers


def _load_intrinsics(path) -> Intrinsics:
    intr, _ = fileio.parse_camera_config(Path(path).read_text())
    return intr


def _looks_like_config(text: str) -> bool:
    for raw in text.splitlines():
        stripped = raw.split("#", 1)[0].strip()
        if stripped:
            return ":" in stripped
    return False


def _load_pose(spec: str) -> Extrinsic:
    """Load one pose from 'file' or 'file@FRAME'.

    The file is either a KITTI odometry pose file (frame selects the row,
    default 0) or a camera-config document containing R and t.
    """
    path_part, _, frame_part = spec.partition("@")
    frame = 0
    if frame_part:
        try:
            frame = int(frame_part)
        except ValueError:
            raise UsageError(f"bad frame index in {spec!r}") from None
    text = Path(path_part).read_text()
    if _looks_like_config(text):
        if frame_part:
            raise UsageError(f"{path_part}: @FRAME only applies to pose files")
        _, pose = fileio.parse_camera_config(text)
        if pose is None:
            raise MissingField("R", f"{path_part}: config carries no pose")
        return pose
    seq = fileio.parse_kitti_poses(text)
    if not 0 <= frame < len(seq):
        raise UsageError(f"{path_part}: frame {frame} outside 0..{len(seq) - 1}")
    return seq.frames[frame]


def _parse_bg_color(text: str):
    parts = text.split(",")
    if len(parts) != 3:
        raise UsageError(f"--bg-color wants R,G,B got {text!r}")
    try:
        color = tuple(float(p) for p in parts)
    except ValueError:
        raise UsageError(f"--bg-color wants numbers, got {text!r}") from None
    return color


def _encode_options(args) -> EncodeOptions:
    return EncodeOptions(
        skip_background=args.skip_background,
        background_color=_parse_bg_color(args.bg_color),
        background_tolerance=args.bg_tol,
        extended=args.extended,
    )


def _grid_args(args) -> dict:
    if (args.grid is None) == (args.random_frac is None):
        raise UsageError("exactly one of --grid or --random-frac is required")
    if args.grid is not None:
        return {"mode": "regular", "r": args.grid}
    if args.seed is None:
        raise UsageError("--random-frac requires an explicit --seed")
    return {"mode": "random", "fraction": args.random_frac, "seed": args.seed}


def _build_grid(grid_args: dict, h: int, w: int) -> SampleGrid:
    if grid_args["mode"] == "regular":
        return grid_samples(h, w, grid_args["r"])
    return random_samples(h, w, grid_args["fraction"], grid_args["seed"])


def _encode_pair(
    source_png,
    src_pose: Extrinsic,
    tgt_pose: Extrinsic,
    K_s: Intrinsics,
    K_t: Optional[Intrinsics],
    grid_args: dict,
    opts: EncodeOptions,
    keep_writers: bool = False,
):
    img = fileio.read_png(source_png)
    rel = relative_motion(src_pose, tgt_pose)
    F = fundamental_matrix(K_s, K_t, rel)
    grid = _build_grid(grid_args, img.h, img.w)
    encoded = encode(
        img,
        F,
        grid,
        opts,
        t_s=src_pose.t,
        t_t=tgt_pose.t,
        keep_writers=keep_writers,
    )
    return encoded, F


def _write_outputs(encoded: EncodedPose, out_path, png_path=None):
    fileio.write_tensor(encoded, out_path)
    if png_path is None:
        return
    data = encoded.image.data
    fileio.write_png(data[:, :, :3], png_path)
    if encoded.image.channels == 4:
        m = fileio.delta_visualization_mapping(encoded.delta_t)
        gray = np.clip(m["offset"] + m["scale"] * data[:, :, 3], 0.0, 1.0)
        delta_path = Path(png_path).with_name(Path(png_path).stem + "_delta.png")
        fileio.write_png(gray[:, :, None], delta_path)


def _pixels_set(encoded: EncodedPose) -> int:
    return int(np.count_nonzero(encoded.image.data[:, :, :3].max(axis=2) > 0))


# ---------------------------------------------------------------------------
# subcommands


def cmd_encode(args) -> int:
    opts = _encode_options(args)
    K_s = _load_intrinsics(args.intrinsics)
    K_t = _load_intrinsics(args.tgt_intrinsics) if args.tgt_intrinsics else None
    src_pose = _load_pose(args.src_pose)
    tgt_pose = _load_pose(args.tgt_pose)
    encoded, _ = _encode_pair(
        args.source, src_pose, tgt_pose, K_s, K_t, _grid_args(args), opts
    )
    _write_outputs(encoded, args.out, args.png)
    print(
        f"encoded {encoded.image.h}x{encoded.image.w}x{encoded.image.channels} "
        f"lines_drawn={encoded.lines_drawn} pixels_set={_pixels_set(encoded)} "
        f"delta_t={encoded.delta_t}"
    )
    return EXIT_OK


def _batch_item(task) -> Tuple[str, Optional[str]]:
    """Encode one (source, target) pair; returns (output name, error or None)."""
    (src_img, s_pose, t_pose, K_s, K_t, grid_args, opts, out_path, png) = task
    try:
        encoded, _ = _encode_pair(src_img, s_pose, t_pose, K_s, K_t, grid_args, opts)
        _write_outputs(encoded, out_path, png)
        return out_path.name, None
    except (EpiposeError, OSError, ValueError) as exc:
        return out_path.name, f"{type(exc).__name__}: {exc}"


def _load_jobspec(args) -> JobSpec:
    images_dir = Path(args.images)
    images = tuple(sorted(p for p in images_dir.glob("*.png")))
    if args.dataset == "kitti":
        if not args.intrinsics:
            raise UsageError("--intrinsics is required for the kitti dataset")
        seq = fileio.parse_kitti_poses(Path(args.poses).read_text())
        poses = seq.frames
        intr = _load_intrinsics(args.intrinsics)
        intrinsics = tuple(intr for _ in poses)
    else:  # configs: one camera-config (with pose) per frame
        config_paths = sorted(
            p for p in Path(args.poses).iterdir() if p.is_file()
        )
        parsed = [fileio.parse_camera_config(p.read_text()) for p in config_paths]
        for p, (_, pose) in zip(config_paths, parsed):
            if pose is None:
                raise MissingField("R", f"{p}: config carries no pose")
        intrinsics = tuple(intr for intr, _ in parsed)
        poses = tuple(pose for _, pose in parsed)
    if len(images) != len(poses):
        raise UsageError(f"{len(images)} images but {len(poses)} poses")
    return JobSpec(
        dataset_kind=args.dataset,
        seq=args.seq or images_dir.name,
        images=images,
        poses=poses,
        intrinsics=intrinsics,
        max_gap=args.max_gap,
        grid_args=_grid_args(args),
        options=_encode_options(args),
        out_dir=Path(args.out),
        workers=args.workers,
        write_png=args.png_out,
    )


def cmd_batch(args) -> int:
    spec = _load_jobspec(args)
    if spec.max_gap > 10:
        log.warning("--max-gap %d beyond the usual 10-frame window", spec.max_gap)
    spec.out_dir.mkdir(parents=True, exist_ok=True)

    tasks = []
    skipped = 0
    for s, t in spec.pairs():
        out_path = spec.out_dir / f"{spec.seq}_{s:06d}_{t:06d}.ept"
        if out_path.exists():
            skipped += 1
            continue
        png = out_path.with_suffix(".png") if spec.write_png else None
        tasks.append(
            (
                spec.images[s],
                spec.poses[s],
                spec.poses[t],
                spec.intrinsics[s],
                spec.intrinsics[t],
                spec.grid_args,
                spec.options,
                out_path,
                png,
            )
        )

    failures = []
    done = 0
    if spec.workers == 1:
        results = map(_batch_item, tasks)
    else:
        pool = ProcessPoolExecutor(max_workers=spec.workers)
        results = pool.map(_batch_item, tasks)
    for name, error in results:
        done += 1
        if error is None:
            log.info("wrote %s", name)
        else:
            failures.append((name, error))
            log.error("failed %s: %s", name, error)
    if spec.workers != 1:
        pool.shutdown()

    print(
        f"batch complete: {done - len(failures)} written, {skipped} skipped "
        f"(existing), {len(failures)} failed"
    )
    for name, error in failures:
        print(f"failed {name}: {error}", file=sys.stderr)
    return EXIT_DATA if failures else EXIT_OK


def cmd_check(args) -> int:
    stored = fileio.read_tensor(args.tensor)
    opts = stored.options or EncodeOptions(extended=stored.image.channels == 4)
    K_s = _load_intrinsics(args.intrinsics)
    K_t = _load_intrinsics(args.tgt_intrinsics) if args.tgt_intrinsics else None
    src_pose = _load_pose(args.src_pose)
    tgt_pose = _load_pose(args.tgt_pose)
    grid_args = {
        k: v for k, v in stored.grid.metadata().items() if k not in ("h", "w")
    }
    redone, F = _encode_pair(
        args.source,
        src_pose,
        tgt_pose,
        K_s,
        K_t,
        grid_args,
        opts,
        keep_writers=True,
    )

    expected = np.ascontiguousarray(redone.image.data, dtype=np.float32)
    actual = np.asarray(stored.image.data, dtype=np.float32)
    if expected.shape != actual.shape:
        print(
            f"check failed: tensor is {actual.shape}, recomputation gives "
            f"{expected.shape}",
            file=sys.stderr,
        )
        return EXIT_VERIFY
    diff = np.nonzero((expected != actual).any(axis=2))
    if diff[0].size:
        y, x = int(diff[0][0]), int(diff[1][0])
        print(
            f"check failed: {diff[0].size} pixel(s) differ from recomputation, "
            f"first at x={x} y={y}",
            file=sys.stderr,
        )
        return EXIT_VERIFY

    # Distance bound of each drawn pixel to the line that painted it.
    writers = redone.writers
    ys, xs = np.nonzero(writers >= 0)
    max_residual = 0.0
    worst = None
    if ys.size:
        coeffs = np.zeros((len(redone.grid.coords), 3))
        for idx in np.unique(writers[ys, xs]):
            p = redone.grid.coords[idx]
            coeffs[idx] = F.F @ np.array([float(p.x), float(p.y), 1.0])
        abc = coeffs[writers[ys, xs]]
        dist = np.abs(abc[:, 0] * xs + abc[:, 1] * ys + abc[:, 2]) / np.hypot(
            abc[:, 0], abc[:, 1]
        )
        k = int(np.argmax(dist))
        max_residual = float(dist[k])
        worst = (int(xs[k]), int(ys[k]))

    print(f"pixels_checked={ys.size}")
    print(f"max_residual={max_residual!r}")
    if max_residual > args.max_dist:
        print(
            f"check failed: residual {max_residual} > {args.max_dist} "
            f"at x={worst[0]} y={worst[1]}",
            file=sys.stderr,
        )
        return EXIT_VERIFY
    print("check passed")
    return EXIT_OK


def cmd_loss(args) -> int:
    pred = fileio.read_png(args.source)
    target = fileio.read_png(args.target)
    report = total_loss(pred, target, args.lam, gaussian_kernel(args.ksize))
    print(
        f"L1 {report.l1:.6f}, spectral {report.spectral:.6f}, "
        f"total {report.total:.6f} (lambda {report.lam:g}, ksize {args.ksize})"
    )
    print(f"l1={report.l1!r}")
    print(f"spectral={report.spectral!r}")
    print(f"total={report.total!r}")
    print(f"lambda={report.lam!r}")
    return EXIT_OK


def cmd_metrics(args) -> int:
    pred = fileio.read_png(args.source)
    target = fileio.read_png(args.target)
    report = metric_report(pred, target)
    print(
        f"MAE {report.mae:.6f}, SSIM {report.ssim:.6f}, PSNR {report.psnr:.4f} dB "
        f"(ssim on {report.ssim_mode})"
    )
    print(f"mae={report.mae!r}")
    print(f"ssim={report.ssim!r}")
    print(f"psnr={report.psnr!r}")
    return EXIT_OK


def cmd_rescale_intrinsics(args) -> int:
    intr, pose = fileio.parse_camera_config(Path(args.intrinsics).read_text())
    try:
        old_w, old_h = (int(v) for v in args.old_size.lower().split("x"))
        new_w, new_h = (int(v) for v in args.new_size.lower().split("x"))
    except ValueError:
        raise UsageError("sizes must look like 1242x375") from None
    out = fileio.rescale_intrinsics(intr, (old_h, old_w), (new_h, new_w))
    sys.stdout.write(fileio.format_camera_config(out, pose))
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _add_encode_inputs(p):
    p.add_argument("--source", required=True, help="source image PNG")
    p.add_argument("--src-pose", required=True, help="pose file (KITTI row via file@N, or camera-config)")
    p.add_argument("--tgt-pose", required=True, help="target pose, same formats")
    p.add_argument("--intrinsics", required=True, help="camera-config document")
    p.add_argument("--tgt-intrinsics", help="target camera-config when it differs")


def _add_grid_flags(p):
    p.add_argument("--grid", type=int, help="regular grid samples per axis")
    p.add_argument("--random-frac", type=float, help="random sampling fraction")
    p.add_argument("--seed", type=int, help="seed for --random-frac")


def _add_option_flags(p):
    p.add_argument("--extended", action="store_true", help="add the translation scalar channel")
    p.add_argument("--skip-background", action="store_true")
    p.add_argument("--bg-color", default="0,0,0", help="background RGB in [0,1], comma separated")
    p.add_argument("--bg-tol", type=float, default=0.0, help="per-channel background tolerance")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="epipose",
        description="Encode relative camera poses as colored epipolar-line images.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    enc = sub.add_parser("encode", help="encode one source->target pair")
    _add_encode_inputs(enc)
    _add_grid_flags(enc)
    _add_option_flags(enc)
    enc.add_argument("--out", required=True, help="output tensor (.ept)")
    enc.add_argument("--png", help="also write a PNG visualization")
    enc.set_defaults(func=cmd_encode)

    bat = sub.add_parser("batch", help="encode every pair of a sequence within a frame gap")
    bat.add_argument("--dataset", choices=("kitti", "configs"), default="kitti")
    bat.add_argument("--images", required=True, help="directory of frame PNGs (sorted by name)")
    bat.add_argument("--poses", required=True, help="KITTI pose file, or directory of camera-configs")
    bat.add_argument("--intrinsics", help="camera-config (kitti dataset)")
    bat.add_argument("--max-gap", type=int, default=10, help="max |source-target| frame gap")
    _add_grid_flags(bat)
    _add_option_flags(bat)
    bat.add_argument("--out", required=True, help="output directory")
    bat.add_argument("--png", dest="png_out", action="store_true", help="also write PNGs")
    bat.add_argument("--workers", type=int, default=1)
    bat.add_argument("--seq", help="sequence name for output files (default: images dir name)")
    bat.set_defaults(func=cmd_batch)

    chk = sub.add_parser("check", help="re-derive a tensor and verify it")
    chk.add_argument("--tensor", required=True, help="tensor file to verify")
    _add_encode_inputs(chk)
    chk.add_argument(
        "--max-dist",
        type=float,
        default=MAX_PIXEL_DISTANCE,
        help="max allowed pixel-to-line distance (default sqrt(2)/2)",
    )
    chk.set_defaults(func=cmd_check)

    los = sub.add_parser("loss", help="L1 + spectral loss between two images")
    los.add_argument("--source", required=True, help="predicted image PNG")
    los.add_argument("--target", required=True, help="target image PNG")
    los.add_argument("--lambda", dest="lam", type=float, default=DEFAULT_LAMBDA)
    los.add_argument("--ksize", type=int, default=DEFAULT_KERNEL_SIZE)
    los.set_defaults(func=cmd_loss)

    met = sub.add_parser("metrics", help="MAE / SSIM / PSNR between two images")
    met.add_argument("--source", required=True, help="predicted image PNG")
    met.add_argument("--target", required=True, help="target image PNG")
    met.set_defaults(func=cmd_metrics)

    res = sub.add_parser("rescale-intrinsics", help="adjust intrinsics for a resize")
    res.add_argument("--intrinsics", required=True)
    res.add_argument("--old-size", required=True, help="WxH before resize")
    res.add_argument("--new-size", required=True, help="WxH after resize")
    res.set_defaults(func=cmd_rescale_intrinsics)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(
        level=os.environ.get("EPIPOSE_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DegenerateMotion, DegenerateLine) as exc:
        print(f"degenerate geometry: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (EpiposeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
