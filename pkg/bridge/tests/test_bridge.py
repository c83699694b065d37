import numpy as np
import pytest

from epipose import DegenerateMotion, ShapeMismatch
from epipose_bridge import ShapeError, py_encode, py_losses, version


def pose_pair():
    R = np.eye(3)
    return R, np.zeros(3), R, np.array([0.2, 0.0, 0.1])


def default_K(size=64):
    return np.array([[64.0, 0.0, size / 2], [0.0, 64.0, size / 2], [0.0, 0.0, 1.0]])


def random_source(rng, h=64, w=64):
    return (rng.randint(0, 256, size=(h, w, 3)) / 255.0).astype(np.float32)


GRID = {"mode": "regular", "r": 8}


class TestPyEncode:
    def test_basic_shape_and_dtype(self):
        rng = np.random.RandomState(1)
        R_s, t_s, R_t, t_t = pose_pair()
        out = py_encode(random_source(rng), default_K(), None, R_s, t_s, R_t, t_t, GRID)
        assert out.shape == (64, 64, 3)
        assert out.dtype == np.float32
        assert out.flags.c_contiguous

    def test_extended_adds_channel(self):
        rng = np.random.RandomState(2)
        R_s, t_s, R_t, t_t = pose_pair()
        out = py_encode(
            random_source(rng),
            default_K(),
            None,
            R_s,
            t_s,
            R_t,
            t_t,
            GRID,
            options={"extended": True},
        )
        assert out.shape == (64, 64, 4)

    def test_degenerate_motion_is_typed(self):
        rng = np.random.RandomState(3)
        R = np.eye(3)
        with pytest.raises(DegenerateMotion):
            py_encode(
                random_source(rng), default_K(), None, R, np.zeros(3), R, np.zeros(3), GRID
            )

    def test_wrong_shape_names_argument(self):
        rng = np.random.RandomState(4)
        R_s, t_s, R_t, t_t = pose_pair()
        with pytest.raises(ShapeError, match="source_array"):
            py_encode(rng.rand(64, 64), default_K(), None, R_s, t_s, R_t, t_t, GRID)
        with pytest.raises(ShapeError, match="K_s"):
            py_encode(random_source(rng), np.eye(4), None, R_s, t_s, R_t, t_t, GRID)
        with pytest.raises(ShapeError, match="t_t"):
            py_encode(
                random_source(rng), default_K(), None, R_s, t_s, R_t, np.zeros(4), GRID
            )

    def test_non_contiguous_input_copied(self):
        rng = np.random.RandomState(5)
        R_s, t_s, R_t, t_t = pose_pair()
        big = random_source(rng, 64, 128)
        view = big[:, ::2, :]  # strided, non-contiguous
        assert not view.flags.c_contiguous
        out = py_encode(view, default_K(), None, R_s, t_s, R_t, t_t, GRID)
        expected = py_encode(
            np.ascontiguousarray(view), default_K(), None, R_s, t_s, R_t, t_t, GRID
        )
        assert out.tobytes() == expected.tobytes()

    def test_zero_copy_for_conforming_layout(self):
        from epipose_bridge import _ingest

        rng = np.random.RandomState(6)
        src = random_source(rng)
        assert _ingest(src, "source_array", ndim=3) is src

    def test_random_grid_mode(self):
        rng = np.random.RandomState(7)
        R_s, t_s, R_t, t_t = pose_pair()
        grid = {"mode": "random", "fraction": 0.01, "seed": 11}
        a = py_encode(random_source(rng), default_K(), None, R_s, t_s, R_t, t_t, grid)
        b = py_encode(
            random_source(np.random.RandomState(7)),
            default_K(),
            None,
            R_s,
            t_s,
            R_t,
            t_t,
            grid,
        )
        assert a.tobytes() == b.tobytes()


class TestPyLosses:
    def test_identical_arrays(self):
        img = np.random.RandomState(8).rand(32, 32, 3).astype(np.float32)
        out = py_losses(img, img)
        assert out == {"l1": 0.0, "spectral": 0.0, "total": 0.0}

    def test_lambda_zero(self):
        rng = np.random.RandomState(9)
        a = rng.rand(32, 32, 3).astype(np.float32)
        b = rng.rand(32, 32, 3).astype(np.float32)
        out = py_losses(a, b, lam=0.0)
        assert out["total"] == out["l1"]
        assert out["spectral"] > 0.0

    def test_shape_mismatch_typed(self):
        with pytest.raises(ShapeMismatch):
            py_losses(np.zeros((8, 8, 3), np.float32), np.zeros((8, 9, 3), np.float32))

    def test_kernel_size_forwarded(self):
        rng = np.random.RandomState(10)
        a = rng.rand(32, 32, 3).astype(np.float32)
        b = rng.rand(32, 32, 3).astype(np.float32)
        assert py_losses(a, b, k_s=5) != py_losses(a, b, k_s=7)


def test_version_introspection():
    v = version()
    assert set(v) == {"bridge", "core"}
    assert all(isinstance(x, str) for x in v.values())
