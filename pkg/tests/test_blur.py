import numpy as np
import pytest

from deaberrate import (
    NoiseSpec,
    PsfMap,
    delta_psf_map,
    degrade,
    make_pair_set,
    synth_gaussian_map,
    synthetic_scene,
)
from deaberrate.errors import DimensionMismatch, InvalidSpec
from oracles import spatial_convolve_naive


def _random_psf_map(rng, rows, cols, channels, size):
    kernels = rng.random((rows, cols, channels, size, size))
    kernels /= kernels.sum(axis=(3, 4), keepdims=True)
    return PsfMap(kernels.astype(np.float32))


class TestDegrade:
    def test_delta_kernels_are_identity(self):
        rng = np.random.default_rng(0)
        img = rng.random((24, 20, 3), dtype=np.float32)
        out = degrade(img, delta_psf_map(2, 2, 3, size=5), NoiseSpec())
        assert np.array_equal(out, img)

    def test_box_kernel_on_constant_image(self):
        box = np.full((1, 1, 1, 5, 5), 1 / 25.0, dtype=np.float32)
        img = np.full((16, 16), 0.6, np.float32)
        out = degrade(img, PsfMap(box), NoiseSpec())
        assert np.abs(out - 0.6).max() < 1e-6

    def test_interior_matches_naive_convolution(self):
        # oracle: O(n^2 k^2) spatial convolution with the per-cell kernel
        rng = np.random.default_rng(1)
        img = rng.random((32, 32), dtype=np.float32)
        psf = _random_psf_map(rng, 2, 2, 1, 5)
        out = degrade(img, psf, NoiseSpec())
        full = img.astype(np.float64)
        for r in range(2):
            for c in range(2):
                expected = spatial_convolve_naive(full, psf.cell(r, c, 0).astype(np.float64))
                r0, r1 = (0, 16) if r == 0 else (16, 32)
                c0, c1 = (0, 16) if c == 0 else (16, 32)
                # stay a kernel radius away from the image border
                rr0, rr1 = max(r0, 2), min(r1, 30)
                cc0, cc1 = max(c0, 2), min(c1, 30)
                diff = np.abs(out[rr0:rr1, cc0:cc1] - expected[rr0:rr1, cc0:cc1])
                assert diff.max() < 1e-6

    def test_asymmetric_kernel_pins_true_convolution(self):
        # a shifted delta must translate the image in the convolution direction
        kernel = np.zeros((1, 1, 1, 3, 3), dtype=np.float32)
        kernel[0, 0, 0, 1, 2] = 1.0  # one tap right of center
        img = np.zeros((9, 9), np.float32)
        img[4, 4] = 1.0
        out = degrade(img, PsfMap(kernel), NoiseSpec())
        # true convolution: y[i, j] = sum k[a, b] x[i-a', j-b'], peak moves right
        assert out[4, 5] == pytest.approx(1.0, abs=1e-6)
        assert abs(out[4, 3]) < 1e-6

    def test_gaussian_noise_is_seeded(self):
        rng = np.random.default_rng(2)
        img = rng.random((16, 16, 3), dtype=np.float32)
        psf = delta_psf_map(1, 1, 3, size=3)
        noise = NoiseSpec(kind="gaussian", sigma=0.05, seed=42)
        a = degrade(img, psf, noise)
        b = degrade(img, psf, noise)
        c = degrade(img, psf, NoiseSpec(kind="gaussian", sigma=0.05, seed=43))
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)
        assert (a - img).std() == pytest.approx(0.05, rel=0.1)

    def test_mean_intensity_preserved(self):
        img = synthetic_scene(192, 256, seed=3)
        psf = synth_gaussian_map(2, 3, 3, seed=4, sigma_range=(1.0, 2.5), size=9)
        out = degrade(img, psf, NoiseSpec())
        assert abs(float(out.mean()) - float(img.mean())) < 1e-4
        # replication effects vanish exactly on constant images
        const = np.full((64, 64, 3), 0.43, np.float32)
        out_const = degrade(const, psf, NoiseSpec())
        assert np.abs(out_const - 0.43).max() == 0.0

    def test_channel_mismatch_rejected(self):
        img = np.zeros((16, 16, 3), np.float32)
        with pytest.raises(DimensionMismatch):
            degrade(img, delta_psf_map(1, 1, 1, size=3), NoiseSpec())


class TestMakePairSet:
    def test_four_regions_with_different_psfs(self):
        psf = synth_gaussian_map(16, 16, 3, seed=5, sigma_range=(0.6, 3.0), size=9)
        scene = np.ones((300, 300, 3), np.float32)
        scene[::4, :, :] = 0.0  # horizontal line pattern reacts to blur strength
        pairs = make_pair_set(1, [scene], psf, NoiseSpec(seed=1), crop=256)
        sample = pairs[0]
        assert sample.degraded.shape == (256, 256, 3)
        assert sample.psf.kernels.shape[:2] == (2, 2)
        quads = [
            sample.degraded[:128, :128],
            sample.degraded[:128, 128:],
            sample.degraded[128:, :128],
            sample.degraded[128:, 128:],
        ]
        stats = [q[8:-8, 8:-8].std() for q in quads]
        assert len({round(s, 6) for s in stats}) > 1

    def test_count_zero_is_empty(self):
        psf = delta_psf_map(4, 4, 3, size=3)
        assert make_pair_set(0, [], psf, NoiseSpec(), crop=32) == []

    def test_same_seed_identical(self):
        psf = synth_gaussian_map(4, 4, 3, seed=6, sigma_range=(1.0, 2.0), size=7)
        imgs = [synthetic_scene(80, 90, seed=7), synthetic_scene(90, 80, seed=8)]
        noise = NoiseSpec(kind="gaussian", sigma=0.01, seed=9)
        a = make_pair_set(3, imgs, psf, noise, crop=64)
        b = make_pair_set(3, imgs, psf, noise, crop=64)
        for pa, pb in zip(a, b):
            assert np.array_equal(pa.degraded, pb.degraded)
            assert np.array_equal(pa.truth, pb.truth)
            assert np.array_equal(pa.psf.kernels, pb.psf.kernels)

    def test_source_too_small(self):
        psf = delta_psf_map(4, 4, 3, size=3)
        with pytest.raises(InvalidSpec):
            make_pair_set(1, [np.zeros((31, 64, 3), np.float32)], psf, NoiseSpec(), crop=32)
