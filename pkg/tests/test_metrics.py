import csv
import json

import numpy as np
import pytest

from conftest import pilot_value
from deaberrate import (
    NoiseSpec,
    SolverConfig,
    benchmark,
    default_schedules,
    degrade,
    per_patch_psnr,
    psnr,
    ssim,
    synth_gaussian_map,
    synthetic_scene,
    tv_projector,
)
from deaberrate.errors import DimensionMismatch


class TestPsnr:
    def test_identical_images_hit_the_cap(self):
        a = np.random.default_rng(0).random((16, 16, 3), dtype=np.float32)
        assert psnr(a, a) == 100.0

    def test_uniform_difference_is_exactly_20db(self):
        a = np.zeros((32, 32, 3), np.float32)
        b = np.full((32, 32, 3), 0.1, np.float32)
        assert psnr(a, b, peak=1.0) == pytest.approx(20.0, abs=1e-6)

    def test_matches_direct_formula(self):
        rng = np.random.default_rng(1)
        a = rng.random((20, 24))
        b = rng.random((20, 24))
        expected = 10.0 * np.log10(1.0 / np.mean((a - b) ** 2))
        assert psnr(a, b) == pytest.approx(expected, abs=1e-9)

    def test_symmetry(self):
        rng = np.random.default_rng(2)
        a = rng.random((12, 12, 3))
        b = rng.random((12, 12, 3))
        assert psnr(a, b) == psnr(b, a)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            psnr(np.zeros((4, 4)), np.zeros((4, 5)))


class TestSsim:
    def test_identical_is_one(self):
        a = np.random.default_rng(3).random((32, 32, 3))
        assert ssim(a, a) == pytest.approx(1.0, abs=1e-9)

    def test_negative_image_scores_low(self):
        # frozen from a pilot evaluation; must stay below 0.5
        a = synthetic_scene(64, 64, seed=4)
        value = ssim(a, 1.0 - a)
        assert value < 0.5
        assert value == pytest.approx(pilot_value("ssim_negative"), abs=1e-6)

    def test_constant_shift_matches_closed_form(self):
        # all windows identical: only the luminance term differs from 1
        c = 0.25
        a = np.full((24, 24), c)
        b = np.full((24, 24), c + 0.5)
        mu1, mu2 = c, c + 0.5
        c1 = 0.01**2
        expected = (2 * mu1 * mu2 + c1) / (mu1**2 + mu2**2 + c1)
        assert ssim(a, b) == pytest.approx(expected, abs=1e-9)

    def test_too_small_rejected(self):
        with pytest.raises(DimensionMismatch):
            ssim(np.zeros((10, 32)), np.zeros((10, 32)))

    def test_bounded_by_one(self):
        rng = np.random.default_rng(5)
        for _ in range(3):
            a = rng.random((24, 24, 3))
            b = rng.random((24, 24, 3))
            assert ssim(a, b) <= 1.0


class TestPerPatchPsnr:
    def test_grid_shape_and_values(self):
        rng = np.random.default_rng(6)
        a = rng.random((16, 16)).astype(np.float32)
        b = a.copy()
        b[:8, :8] += 0.1  # corrupt only the top-left cell
        grid = per_patch_psnr(a, b, 2, 2)
        assert grid.shape == (2, 2)
        assert grid[0, 0] == pytest.approx(20.0, abs=1e-5)
        assert grid[0, 1] == 100.0


class TestBenchmark:
    def _setup(self):
        psf = synth_gaussian_map(2, 2, 3, seed=7, sigma_range=(1.0, 2.0), size=9)
        truth = synthetic_scene(64, 80, seed=8)
        y = degrade(truth, psf, NoiseSpec(kind="gaussian", sigma=0.01, seed=9))
        config = SolverConfig(
            stages=2, hyper=default_schedules(2, psf), projector=tv_projector(5)
        )
        return psf, truth, y, config

    def test_empty_scene_set(self, tmp_path):
        psf, _, _, config = self._setup()
        csv_path = tmp_path / "report.csv"
        reports = benchmark([], psf, config, csv_path=csv_path)
        assert reports == []
        with open(csv_path) as fh:
            assert fh.read().strip() == "scene,psnr_db,ssim,wall_time_ms"

    def test_reports_and_files(self, tmp_path):
        psf, truth, y, config = self._setup()
        csv_path = tmp_path / "report.csv"
        json_path = tmp_path / "report.json"
        reports = benchmark(
            [("scene0", y, truth)], psf, config, csv_path=csv_path, json_path=json_path
        )
        assert len(reports) == 1
        rep = reports[0]
        assert rep.wall_time_ms > 0
        assert rep.ssim <= 1.0
        with open(csv_path) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["scene", "psnr_db", "ssim", "wall_time_ms"]
        assert rows[1][0] == "scene0"
        assert float(rows[1][1]) == pytest.approx(rep.psnr_db, abs=1e-5)
        payload = json.loads(json_path.read_text())
        assert payload[0]["scene"] == "scene0"

    def test_metrics_deterministic_across_repeats(self):
        psf, truth, y, config = self._setup()
        a = benchmark([("s", y, truth)], psf, config)[0]
        b = benchmark([("s", y, truth)], psf, config)[0]
        assert a.psnr_db == b.psnr_db
        assert a.ssim == b.ssim

    def test_reference_scale_scene_reports_wall_time(self):
        # 1024x768 with 128px cells is the reference evaluation geometry
        psf = synth_gaussian_map(6, 8, 3, seed=10, sigma_range=(1.0, 2.0), size=9)
        truth = synthetic_scene(768, 1024, seed=11)
        y = degrade(truth, psf, NoiseSpec(kind="gaussian", sigma=0.01, seed=12))
        config = SolverConfig(
            stages=1, hyper=default_schedules(1, psf), projector=tv_projector(3)
        )
        rep = benchmark([("fullframe", y, truth)], psf, config)[0]
        assert rep.wall_time_ms > 0
        assert np.isfinite(rep.psnr_db)
