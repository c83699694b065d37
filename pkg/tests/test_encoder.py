import math

import numpy as np
import pytest

from epipose import (
    EmptyEncodingWarning,
    EncodeOptions,
    FundamentalMatrix,
    ImageBuffer,
    Intrinsics,
    Pixel,
    RelativeMotion,
    SampleGrid,
    clip_line,
    encode,
    encode_extended,
    epipolar_line,
    extended_delta,
    fundamental_matrix,
    grid_samples,
    rasterize,
    relative_motion,
)
from synth import quantized_random_image, random_intrinsics, random_pose_pair


def single_pixel_grid(x, y, h=256, w=256):
    return SampleGrid((Pixel(x, y),), "regular", {"r": 1}, h, w)


def random_case(rng, h=256, w=256, r=8):
    src, tgt = random_pose_pair(rng)
    F = fundamental_matrix(random_intrinsics(rng), random_intrinsics(rng),
                           relative_motion(src, tgt))
    img = quantized_random_image(rng, h, w)
    return img, F, grid_samples(h, w, r), src, tgt


def line_coverage(F, grid, opts, img, h, w):
    """Per-pixel list of (grid index, color) from each drawn line, in order."""
    covered = {}
    for idx, p in enumerate(grid.coords):
        color = img[p.y, p.x]
        if opts.skip_background and np.all(
            np.abs(color - np.asarray(opts.background_color)) <= opts.background_tolerance
        ):
            continue
        try:
            line = epipolar_line(F, p)
        except Exception:
            continue
        seg = clip_line(line, h, w)
        if seg is None:
            continue
        for q in rasterize(seg):
            covered.setdefault(q, []).append((idx, color, line))
    return covered


class TestEncode:
    def test_single_sample_draws_one_row(self):
        # identity calibration, pure x translation: the epipolar line of the
        # top-left pixel is the row y = 0
        K = Intrinsics(1.0, 1.0, 0.0, 0.0)
        F = fundamental_matrix(K, K, RelativeMotion(np.eye(3), [1.0, 0.0, 0.0]))
        img = np.zeros((256, 256, 3))
        img[0, 0] = (1.0, 0.0, 0.0)
        encoded = encode(ImageBuffer(img), F, single_pixel_grid(0, 0))
        out = encoded.image.data
        assert encoded.lines_drawn == 1
        assert np.array_equal(out[0, :, :], np.tile([1.0, 0.0, 0.0], (256, 1)))
        assert np.count_nonzero(out[1:, :, :]) == 0

    def test_zero_init_untouched_pixels(self):
        rng = np.random.RandomState(41)
        img, F, grid, _, _ = random_case(rng)
        out = encode(img, F, grid).image.data
        covered = line_coverage(F, grid, EncodeOptions(), img, 256, 256)
        untouched = np.ones((256, 256), dtype=bool)
        for q in covered:
            untouched[q.y, q.x] = False
        assert np.count_nonzero(out[untouched]) == 0

    def test_colors_match_last_covering_line(self):
        rng = np.random.RandomState(42)
        for _ in range(5):
            img, F, grid, _, _ = random_case(rng)
            out = encode(img, F, grid).image.data
            covered = line_coverage(F, grid, EncodeOptions(), img, 256, 256)
            bound = math.sqrt(2.0) / 2.0
            nz = np.nonzero(out.max(axis=2) > 0)
            for y, x in zip(*nz):
                entries = covered[Pixel(int(x), int(y))]
                last_idx, last_color, line = entries[-1]
                assert np.array_equal(out[y, x], last_color)
                a, b, c = line
                assert abs(a * x + b * y + c) / math.hypot(a, b) <= bound

    def test_deterministic(self):
        rng = np.random.RandomState(43)
        img, F, grid, _, _ = random_case(rng)
        first = encode(img, F, grid).image.data
        second = encode(img, F, grid).image.data
        assert first.tobytes() == second.tobytes()

    def test_background_skip_filters_lines(self):
        rng = np.random.RandomState(44)
        img, F, _, _, _ = random_case(rng)
        img = img.copy()
        img[0, 0] = (0.0, 0.0, 0.0)
        grid = single_pixel_grid(0, 0)
        opts = EncodeOptions(skip_background=True)
        with pytest.warns(EmptyEncodingWarning):
            encoded = encode(img, F, grid, opts)
        assert encoded.lines_drawn == 0
        assert np.count_nonzero(encoded.image.data) == 0

    def test_background_tolerance(self):
        rng = np.random.RandomState(45)
        img, F, _, _, _ = random_case(rng)
        img = img.copy()
        img[0, 0] = (0.05, 0.02, 0.0)
        grid = single_pixel_grid(0, 0)
        opts = EncodeOptions(skip_background=True, background_tolerance=0.1)
        with pytest.warns(EmptyEncodingWarning):
            assert encode(img, F, grid, opts).lines_drawn == 0
        # below-tolerance color is not background
        strict = EncodeOptions(skip_background=True, background_tolerance=0.01)
        assert encode(img, F, grid, strict).lines_drawn == 1

    def test_grid_size_mismatch(self):
        rng = np.random.RandomState(46)
        img, F, _, _, _ = random_case(rng)
        with pytest.raises(ValueError):
            encode(img, F, grid_samples(128, 128, 4))

    def test_source_must_be_rgb(self):
        rng = np.random.RandomState(47)
        _, F, grid, _, _ = random_case(rng)
        with pytest.raises(ValueError):
            encode(np.zeros((256, 256, 1)), F, grid)


class TestExtendedDelta:
    def test_forward_translation(self):
        assert extended_delta((0, 0, 2), (0, 0, 7)) == 5.0

    def test_dominant_axis_with_sign(self):
        # delta = (1, 0, -6): Z dominates, sign marks backward motion
        assert extended_delta((1, 0, 9), (2, 0, 3)) == -6.0

    def test_equal_translations(self):
        assert extended_delta((1.5, -2.0, 3.0), (1.5, -2.0, 3.0)) == 0.0

    def test_tie_takes_lowest_axis(self):
        assert extended_delta((0.0, 0.0, 0.0), (2.0, -2.0, 0.0)) == 2.0


class TestEncodeExtended:
    def test_channel4_on_drawn_pixels_only(self):
        rng = np.random.RandomState(48)
        for _ in range(3):
            img, F, grid, src, tgt = random_case(rng)
            encoded = encode_extended(img, F, grid, EncodeOptions(), src.t, tgt.t)
            data = encoded.image.data
            assert data.shape[2] == 4
            drawn = data[:, :, :3].max(axis=2) > 0
            ch4 = data[:, :, 3]
            assert np.all(ch4[~drawn] == 0.0)
            if encoded.delta_t != 0.0:
                assert np.array_equal(ch4 != 0.0, drawn)
                assert np.all(ch4[drawn] == encoded.delta_t)

    def test_rgb_identical_to_plain_encode(self):
        rng = np.random.RandomState(49)
        img, F, grid, src, tgt = random_case(rng)
        plain = encode(img, F, grid).image.data
        ext = encode_extended(img, F, grid, EncodeOptions(), src.t, tgt.t)
        assert np.array_equal(ext.image.data[:, :, :3], plain)

    def test_zero_delta_zero_channel(self):
        rng = np.random.RandomState(50)
        img, F, grid, _, _ = random_case(rng)
        t = np.array([0.0, 0.0, 10.0])
        encoded = encode_extended(img, F, grid, EncodeOptions(), t, t)
        assert encoded.delta_t == 0.0
        assert np.count_nonzero(encoded.image.data[:, :, 3]) == 0

    def test_forward_pair_broadcasts_five(self):
        rng = np.random.RandomState(51)
        img, F, grid, _, _ = random_case(rng)
        encoded = encode_extended(
            img, F, grid, EncodeOptions(), (0.0, 0.0, 10.0), (0.0, 0.0, 15.0)
        )
        drawn = encoded.image.data[:, :, :3].max(axis=2) > 0
        assert encoded.delta_t == 5.0
        assert np.all(encoded.image.data[:, :, 3][drawn] == 5.0)

    def test_missing_translations_rejected(self):
        rng = np.random.RandomState(52)
        img, F, grid, _, _ = random_case(rng)
        with pytest.raises(ValueError):
            encode(img, F, grid, EncodeOptions(extended=True))


def test_image_buffer_validation():
    with pytest.raises(ValueError):
        ImageBuffer(np.zeros((4, 4, 2)))
    with pytest.raises(ValueError):
        ImageBuffer(np.full((4, 4, 3), 1.5))
    with pytest.raises(ValueError):
        ImageBuffer(np.zeros((4, 4, 3), dtype=np.uint8))
    # channel 4 may hold any finite value
    data = np.zeros((4, 4, 4))
    data[:, :, 3] = -123.0
    assert ImageBuffer(data).channels == 4
