import numpy as np
import pytest

from conftest import fixture_path
from deaberrate import (
    CnnArch,
    CnnWeights,
    ProjectorInput,
    init_weights,
    load_weights,
    project_cnn,
    project_identity,
    project_tv,
    save_weights,
)
from deaberrate.errors import (
    DimensionMismatch,
    FormatError,
    NonFiniteError,
    ShapeMismatch,
)
from oracles import tv_objective, tv_prox_gradient_descent

SMALL_ARCH = CnnArch(scales=3, widths=(4, 8, 16), blocks_per_scale=2)


def _inp(z, lam):
    return ProjectorInput(z_image=z, lambda_map=lam)


def _random_input(rng, h, w, lam_value=0.1):
    z = rng.random((h, w, 3), dtype=np.float32)
    lam = np.full((h, w, 3), lam_value, dtype=np.float32)
    return _inp(z, lam)


class TestProjectorInput:
    def test_shape_mismatch_rejected(self):
        with pytest.raises(DimensionMismatch):
            _inp(np.zeros((4, 4, 3), np.float32), np.ones((4, 5, 3), np.float32))

    def test_nonpositive_lambda_rejected(self):
        lam = np.ones((4, 4, 3), np.float32)
        lam[1, 1, 0] = 0.0
        with pytest.raises(NonFiniteError):
            _inp(np.zeros((4, 4, 3), np.float32), lam)

    def test_nan_image_rejected(self):
        z = np.zeros((4, 4, 3), np.float32)
        z[0, 0, 0] = np.nan
        with pytest.raises(NonFiniteError):
            _inp(z, np.ones((4, 4, 3), np.float32))


class TestIdentity:
    def test_returns_input_unchanged(self):
        rng = np.random.default_rng(0)
        inp = _random_input(rng, 6, 7)
        assert project_identity(inp) is inp.z_image

    def test_lambda_is_ignored(self):
        rng = np.random.default_rng(1)
        z = rng.random((5, 5, 3), dtype=np.float32)
        a = project_identity(_inp(z, np.full((5, 5, 3), 0.01, np.float32)))
        b = project_identity(_inp(z, np.full((5, 5, 3), 10.0, np.float32)))
        assert np.array_equal(a, b)


class TestTv:
    def test_vanishing_lambda_returns_z(self):
        rng = np.random.default_rng(2)
        z = rng.random((8, 8, 3), dtype=np.float32)
        out = project_tv(_inp(z, np.full((8, 8, 3), 1e-9, np.float32)), iterations=50)
        assert np.abs(out - z).max() < 1e-4

    def test_constant_image_is_fixed_point(self):
        z = np.full((8, 8, 3), 0.37, np.float32)
        out = project_tv(_inp(z, np.full((8, 8, 3), 0.5, np.float32)), iterations=50)
        assert np.abs(out - z).max() < 1e-6

    def test_matches_gradient_descent_oracle_4x4(self):
        rng = np.random.default_rng(0)
        z = rng.random((4, 4))
        lam = np.full((4, 4), 0.1)
        expected = tv_prox_gradient_descent(z, lam)
        inp = _inp(
            np.repeat(z[:, :, None], 3, axis=2).astype(np.float32),
            np.full((4, 4, 3), 0.1, np.float32),
        )
        got = project_tv(inp, iterations=500)
        for ch in range(3):
            assert np.abs(got[:, :, ch].astype(np.float64) - expected).max() < 1e-3

    def test_pixelwise_lambda_is_respected(self):
        # strong prior on the left half flattens it more than the right half
        rng = np.random.default_rng(3)
        z = rng.random((16, 16, 3), dtype=np.float32)
        lam = np.full((16, 16, 3), 1e-4, np.float32)
        lam[:, :8, :] = 0.5
        out = project_tv(_inp(z, lam), iterations=100)
        tv_left = np.abs(np.diff(out[:, :8, 0], axis=0)).sum()
        tv_right = np.abs(np.diff(out[:, 8:, 0], axis=0)).sum()
        raw_left = np.abs(np.diff(z[:, :8, 0], axis=0)).sum()
        assert tv_left < 0.2 * raw_left
        assert tv_right > 0.8 * np.abs(np.diff(z[:, 8:, 0], axis=0)).sum()

    def test_prox_objective_does_not_exceed_value_at_z(self):
        rng = np.random.default_rng(4)
        for trial in range(5):
            z = rng.random((8, 8))
            lam = np.full((8, 8), rng.uniform(0.02, 0.3))
            inp = _inp(
                np.repeat(z[:, :, None], 3, axis=2).astype(np.float32),
                np.repeat(lam[:, :, None], 3, axis=2).astype(np.float32),
            )
            out = project_tv(inp, iterations=30)[:, :, 0].astype(np.float64)
            assert tv_objective(out, z, lam) <= tv_objective(z, z, lam) + 1e-9

    def test_shape_preserved(self):
        rng = np.random.default_rng(5)
        inp = _random_input(rng, 11, 18)
        assert project_tv(inp, iterations=5).shape == (11, 18, 3)


class TestArchAndWeights:
    def test_expected_tensor_names(self):
        shapes = SMALL_ARCH.tensor_shapes()
        assert shapes["head.weight"] == (4, 6, 3, 3)
        assert shapes["tail.weight"] == (3, 4, 3, 3)
        assert shapes["down1.weight"] == (16, 8, 3, 3)
        assert shapes["up0.weight"] == (4, 8, 3, 3)
        assert shapes["fuse1.weight"] == (8, 16, 3, 3)
        assert "enc2.block1.conv2.bias" in shapes
        assert "dec1.block0.conv1.weight" in shapes
        assert "dec2.block0.conv1.weight" not in shapes

    def test_missing_tensor_named_in_error(self):
        weights = init_weights(SMALL_ARCH, seed=0)
        tensors = dict(weights.tensors)
        del tensors["enc1.block0.conv2.weight"]
        with pytest.raises(ShapeMismatch, match="enc1.block0.conv2.weight"):
            CnnWeights(arch=SMALL_ARCH, tensors=tensors)

    def test_wrong_shape_named_in_error(self):
        weights = init_weights(SMALL_ARCH, seed=0)
        tensors = dict(weights.tensors)
        tensors["head.weight"] = np.zeros((4, 5, 3, 3), np.float32)
        with pytest.raises(ShapeMismatch, match="head.weight"):
            CnnWeights(arch=SMALL_ARCH, tensors=tensors)

    def test_round_trip(self, tmp_path):
        weights = init_weights(SMALL_ARCH, seed=7)
        path = tmp_path / "w.uabc"
        save_weights(weights, path)
        loaded = load_weights(path)
        assert loaded.arch == SMALL_ARCH
        for name, tensor in weights.tensors.items():
            assert np.array_equal(loaded.tensors[name], tensor)
        path2 = tmp_path / "w2.uabc"
        save_weights(loaded, path2)
        assert path.read_bytes() == path2.read_bytes()

    def test_truncated_tensor_names_offender(self, tmp_path):
        weights = init_weights(SMALL_ARCH, seed=7)
        path = tmp_path / "w.uabc"
        save_weights(weights, path)
        data = path.read_bytes()
        clipped = tmp_path / "w_clip.uabc"
        clipped.write_bytes(data[: len(data) - 10])
        with pytest.raises(ShapeMismatch, match="tail.bias"):
            load_weights(clipped)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "junk.uabc"
        path.write_bytes(b"WXYZ" + b"\x00" * 32)
        with pytest.raises(FormatError) as err:
            load_weights(path)
        assert err.value.offset == 0

    def test_five_channel_input_rejected(self):
        # the projector contract is a 6-channel input
        weights = init_weights(SMALL_ARCH, seed=0)
        tensors = dict(weights.tensors)
        tensors["head.weight"] = np.zeros((4, 5, 3, 3), np.float32)
        with pytest.raises(ShapeMismatch):
            CnnWeights(arch=SMALL_ARCH, tensors=tensors)


class TestProjectCnn:
    def test_zero_weights_give_zero_output(self):
        rng = np.random.default_rng(6)
        weights = init_weights(SMALL_ARCH)
        out = project_cnn(_random_input(rng, 16, 16), weights)
        assert not out.any()

    @pytest.mark.parametrize("shape", [(64, 64), (100, 76), (256, 256), (37, 41)])
    def test_output_dims_match_input(self, shape):
        rng = np.random.default_rng(7)
        weights = init_weights(SMALL_ARCH, seed=1)
        out = project_cnn(_random_input(rng, *shape), weights)
        assert out.shape == shape + (3,)
        assert np.isfinite(out).all()

    def test_deterministic(self):
        rng = np.random.default_rng(8)
        inp = _random_input(rng, 24, 24)
        weights = init_weights(SMALL_ARCH, seed=2)
        assert np.array_equal(project_cnn(inp, weights), project_cnn(inp, weights))

    def test_non_finite_activation_names_layer(self):
        weights = init_weights(SMALL_ARCH, seed=3)
        tensors = dict(weights.tensors)
        tensors["head.bias"] = np.full((4,), np.float32(1e38))
        bad = CnnWeights(arch=SMALL_ARCH, tensors=tensors)
        rng = np.random.default_rng(9)
        with np.errstate(over="ignore"), pytest.raises(NonFiniteError, match="head|enc0"):
            project_cnn(_random_input(rng, 16, 16), bad)

    def test_matches_checked_in_golden_tensors(self):
        # parity fixture shared with the trainer component
        import json

        meta = json.loads(fixture_path("golden_io.json").read_text())
        x = np.fromfile(fixture_path("golden_input.bin"), dtype="<f4").reshape(
            meta["input_shape"]
        )
        expected = np.fromfile(fixture_path("golden_output.bin"), dtype="<f4").reshape(
            meta["output_shape"]
        )
        weights = load_weights(fixture_path(meta["weights"]))
        inp = ProjectorInput(
            z_image=x[:3].transpose(1, 2, 0), lambda_map=x[3:].transpose(1, 2, 0)
        )
        out = project_cnn(inp, weights).transpose(2, 0, 1)
        assert np.abs(out - expected).max() <= 1e-4
