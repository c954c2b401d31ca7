#!/usr/bin/env python3
"""One-time generator for the checked-in test fixtures and pilot values.

Writes into tests/fixtures/:
  zero_small.uabc / rand_small.uabc   projector weight fixtures
  golden_input.bin / golden_output.bin / golden_io.json
                                      inference parity tensors (shared with
                                      the trainer component)
  schedules_t8_3x4x3.hpmv             golden default schedule
  pilot_values.json                   frozen scalars asserted by the tests

Rerunning overwrites the fixtures; do that only when a deliberate contract
change invalidates them.
"""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = ROOT / "tests" / "fixtures"
sys.path.insert(0, str(ROOT / "tests"))

from deaberrate import (  # noqa: E402
    CnnArch,
    GaussianSpec,
    NoiseSpec,
    ProjectorInput,
    SolverConfig,
    default_schedules,
    degrade,
    delta_psf_map,
    evaluate_map,
    init_weights,
    project_cnn,
    psnr,
    save_weights,
    solve,
    ssim,
    synth_gaussian,
    synth_gaussian_map,
    synthetic_scene,
    tv_projector,
)
from deaberrate.fourier import precompute_spectra, wiener_init  # noqa: E402
from deaberrate.solver import HyperParamMap  # noqa: E402
from deaberrate.tune import save_hyperparam_map  # noqa: E402
from deaberrate.imgio import read_image, write_image  # noqa: E402
from oracles import circular_convolve_naive  # noqa: E402

SMALL_ARCH = CnnArch(scales=3, widths=(4, 8, 16), blocks_per_scale=2)


def weight_fixtures():
    save_weights(init_weights(SMALL_ARCH), FIXTURES / "zero_small.uabc")
    save_weights(init_weights(SMALL_ARCH, seed=3), FIXTURES / "rand_small.uabc")
    print("wrote weight fixtures")


def golden_parity_tensors():
    rng = np.random.default_rng(1234)
    z = rng.random((3, 40, 40)).astype(np.float32)
    lam = rng.uniform(0.005, 0.1, size=(3, 40, 40)).astype(np.float32)
    x = np.concatenate([z, lam], axis=0)
    weights = init_weights(SMALL_ARCH, seed=3)
    inp = ProjectorInput(z_image=z.transpose(1, 2, 0), lambda_map=lam.transpose(1, 2, 0))
    out = project_cnn(inp, weights).transpose(2, 0, 1).astype(np.float32)
    x.tofile(FIXTURES / "golden_input.bin")
    np.ascontiguousarray(out).tofile(FIXTURES / "golden_output.bin")
    (FIXTURES / "golden_io.json").write_text(
        json.dumps(
            {
                "weights": "rand_small.uabc",
                "input_shape": list(x.shape),
                "output_shape": list(out.shape),
                "dtype": "<f4",
            },
            indent=2,
        )
    )
    print("wrote golden parity tensors, output range", out.min(), out.max())


def golden_schedule():
    hyper = default_schedules(8, delta_psf_map(3, 4, 3, size=3))
    save_hyperparam_map(hyper, FIXTURES / "schedules_t8_3x4x3.hpmv")
    print("wrote golden schedule")


def pilot_wiener_gain():
    rng = np.random.default_rng(8)
    kernel = synth_gaussian(GaussianSpec(sigma_x=2.0, sigma_y=2.0, theta=0.0, size=13))
    truth = rng.random((64, 64)).astype(np.float32)
    blurred = circular_convolve_naive(truth, kernel).astype(np.float32)
    s = precompute_spectra(blurred, kernel)
    restored = wiener_init(s, mu=1e-4)
    return psnr(restored, truth) - psnr(blurred, truth)


def pilot_ssim_negative():
    a = synthetic_scene(64, 64, seed=4)
    return ssim(a, 1.0 - a)


def pilot_evaluate_map():
    psf = synth_gaussian_map(1, 1, 1, seed=0, sigma_range=(2.0, 2.0), size=13)
    truth = synthetic_scene(64, 64, seed=1)[:, :, 0]
    y = degrade(truth, psf, NoiseSpec(kind="gaussian", sigma=0.01, seed=2))
    shape = (2, 1, 1, 1)
    hyper = HyperParamMap(
        mu=np.full(shape, 0.02, np.float32), lam=np.full(shape, 0.01, np.float32)
    )
    return evaluate_map(psf, [(y, truth)], hyper, tv_projector(10))


def pilot_cli_blur_psnr():
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        truth = synthetic_scene(96, 128, seed=20)
        write_image(tmp / "truth.png", truth, bits=8)
        for args in (
            ["synth-psf", "--rows", "2", "--cols", "2", "--channels", "3",
             "--size", "9", "--seed", "21", "--sigma-min", "1.0",
             "--sigma-max", "2.0", "-o", str(tmp / "lens.psfm")],
            ["degrade", "-i", str(tmp / "truth.png"), "--psf", str(tmp / "lens.psfm"),
             "--noise", "gaussian:0.01:seed=1", "-o", str(tmp / "blur.png")],
        ):
            subprocess.run(
                [sys.executable, "-m", "deaberrate.cli", *args], check=True
            )
        return psnr(read_image(tmp / "blur.png"), read_image(tmp / "truth.png"))


def pilot_end_to_end():
    truth = synthetic_scene(384, 512, seed=101)
    psf = synth_gaussian_map(3, 4, 3, seed=202, sigma_range=(1.0, 3.0), size=25)
    y = degrade(truth, psf, NoiseSpec(kind="gaussian", sigma=0.01, seed=303))
    config = SolverConfig(
        stages=8, hyper=default_schedules(8, psf), projector=tv_projector(30)
    )
    restored = solve(y, psf, config)
    p_in = psnr(np.clip(y, 0, 1), truth)
    p_out = psnr(restored, truth)
    return p_in, p_out


def main():
    FIXTURES.mkdir(parents=True, exist_ok=True)
    weight_fixtures()
    golden_parity_tensors()
    golden_schedule()
    p_in, p_out = pilot_end_to_end()
    values = {
        "wiener_gain_db": pilot_wiener_gain(),
        "ssim_negative": pilot_ssim_negative(),
        "evaluate_map_golden": pilot_evaluate_map(),
        "cli_blur_psnr": pilot_cli_blur_psnr(),
        "e2e_input_psnr": p_in,
        "e2e_output_psnr": p_out,
        "e2e_margin_db": p_out - p_in,
    }
    (FIXTURES / "pilot_values.json").write_text(json.dumps(values, indent=2))
    print(json.dumps(values, indent=2))


if __name__ == "__main__":
    main()
