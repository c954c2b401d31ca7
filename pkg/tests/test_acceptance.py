"""Acceptance gate: one test per release criterion, tolerances pinned.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one line per
criterion.  Frozen regression values come from tests/fixtures/ (see
tools/gen_fixtures.py).
"""

import subprocess
import sys
import time

import numpy as np
import pytest

from conftest import fixture_path, pilot_value
from deaberrate import (
    GaussianSpec,
    HyperParamMap,
    NoiseSpec,
    ProjectorInput,
    PsfMap,
    RefineConfig,
    SolverConfig,
    chop,
    cnn_projector,
    default_schedules,
    degrade,
    evaluate_map,
    identity_projector,
    load_weights,
    plan_grid,
    precompute_spectra,
    psnr,
    rasterize_lambda,
    refine,
    save_psf_map,
    shave_assemble,
    solve,
    ssim,
    synth_gaussian,
    synth_gaussian_map,
    synthetic_scene,
    tv_projector,
    wiener_init,
    z_update,
)
from deaberrate.imgio import write_image
from oracles import (
    circular_convolve_naive,
    circulant_matrix,
    dense_z_solve,
    spatial_convolve_naive,
)


def report(name: str, detail: str) -> None:
    print(f"[PASS] {name}: {detail}")


def _fixture_setup():
    """The fixed synthetic restoration fixture: 512x384, 4x3 PSF grid."""
    truth = synthetic_scene(384, 512, seed=101)
    psf = synth_gaussian_map(3, 4, 3, seed=202, sigma_range=(1.0, 3.0), size=25)
    degraded = degrade(truth, psf, NoiseSpec(kind="gaussian", sigma=0.01, seed=303))
    return truth, psf, degraded


def test_criterion_closed_form_correctness():
    """z_update matches the dense circulant normal-equation oracle."""
    kernels = {
        "delta": np.pad([[1.0]], 1),
        "box3": np.full((3, 3), 1 / 9.0),
        "gauss5": synth_gaussian(GaussianSpec(1.0, 0.6, 0.4, size=5)),
    }
    started = time.perf_counter()
    worst = 0.0
    cases = 0
    for size in (8, 16):
        # the fast circulant construction must agree with the naive loops
        rng = np.random.default_rng(size)
        probe = rng.random((size, size))
        mat = circulant_matrix(kernels["gauss5"], (size, size))
        naive = circular_convolve_naive(probe, kernels["gauss5"])
        assert np.abs((mat @ probe.ravel()).reshape(size, size) - naive).max() < 1e-12
        for name, kernel in kernels.items():
            for mu in (0.01, 0.1, 1.0):
                rng = np.random.default_rng(hash((size, name, mu)) % 2**32)
                y = rng.random((size, size))
                x_prev = rng.random((size, size))
                expected = dense_z_solve(y, x_prev, kernel, mu)
                spectra = precompute_spectra(y.astype(np.float32), kernel)
                z = z_update(spectra, x_prev.astype(np.float32), mu)
                rmse = float(np.sqrt(np.mean((z - expected) ** 2)))
                assert rmse < 1e-5, f"{name} size={size} mu={mu}: RMSE {rmse}"
                worst = max(worst, rmse)
                cases += 1
    elapsed = time.perf_counter() - started
    assert elapsed < 5.0, f"closed-form suite took {elapsed:.2f}s"
    report(
        "closed-form correctness",
        f"{cases} cases, worst RMSE {worst:.2e} < 1e-5, {elapsed:.2f}s < 5s",
    )


def test_criterion_structural_checks():
    """Chop/assemble identity and the stage-1 Wiener equivalence."""
    rng = np.random.default_rng(0)
    img = rng.random((70, 92, 3), dtype=np.float32)
    for pad in (0, 4, 12):
        geometry = plan_grid(70, 92, 3, 4, pad=pad)
        assert np.array_equal(shave_assemble(chop(img, geometry), geometry), img)

    truth, psf, degraded = (
        synthetic_scene(96, 128, seed=5),
        synth_gaussian_map(2, 2, 3, seed=6, sigma_range=(1.0, 2.0), size=9),
        None,
    )
    degraded = degrade(truth, psf, NoiseSpec(kind="gaussian", sigma=0.01, seed=7))
    hyper = default_schedules(1, psf)
    projector = tv_projector(iterations=10)
    out = solve(
        degraded, psf, SolverConfig(stages=1, hyper=hyper, projector=projector)
    )

    geometry = plan_grid(96, 128, 2, 2, pad=4)
    patches = chop(degraded, geometry)
    z_patches = []
    for r in range(2):
        for c in range(2):
            patch = patches[r * 2 + c]
            z = np.empty_like(patch)
            for ch in range(3):
                spectra = precompute_spectra(patch[:, :, ch], psf.cell(r, c, ch))
                z[:, :, ch] = wiener_init(spectra, float(hyper.mu[0, r, c, ch]))
            z_patches.append(z)
    z_img = shave_assemble(z_patches, geometry)
    lam_map = rasterize_lambda(hyper.lam[0], geometry, 3)
    manual = np.clip(
        projector(ProjectorInput(z_image=z_img, lambda_map=lam_map)), 0.0, 1.0
    )
    assert np.array_equal(out, manual)
    report(
        "structural checks",
        "chop/assemble bit-exact for pads {0,4,12}; stage-1 == wiener o projector",
    )


def test_criterion_forward_model_oracle():
    """degrade matches naive spatial convolution on interior pixels."""
    rng = np.random.default_rng(1)
    img = rng.random((32, 32), dtype=np.float32)
    kernels = rng.random((2, 2, 1, 5, 5))
    kernels /= kernels.sum(axis=(3, 4), keepdims=True)
    psf = PsfMap(kernels.astype(np.float32))
    out = degrade(img, psf, NoiseSpec())
    worst = 0.0
    for r in range(2):
        for c in range(2):
            expected = spatial_convolve_naive(
                img.astype(np.float64), psf.cell(r, c, 0).astype(np.float64)
            )
            r0, r1 = (2, 16) if r == 0 else (16, 30)
            c0, c1 = (2, 16) if c == 0 else (16, 30)
            diff = np.abs(out[r0:r1, c0:c1] - expected[r0:r1, c0:c1]).max()
            assert diff < 1e-6
            worst = max(worst, float(diff))
    report("forward-model oracle", f"interior max deviation {worst:.2e} < 1e-6")


def test_criterion_end_to_end_restoration():
    """Fixture restoration margin and single-threaded runtime."""
    truth, psf, degraded = _fixture_setup()
    config = SolverConfig(
        stages=8, hyper=default_schedules(8, psf), projector=tv_projector(30), threads=1
    )
    started = time.perf_counter()
    restored = solve(degraded, psf, config)
    elapsed = time.perf_counter() - started
    margin = psnr(restored, truth) - psnr(np.clip(degraded, 0, 1), truth)
    frozen = pilot_value("e2e_margin_db")
    assert margin >= 1.5, f"margin {margin:.3f} dB below 1.5 dB"
    assert margin >= frozen - 0.05, f"margin {margin:.3f} dB regressed from {frozen:.3f}"
    assert elapsed < 30.0, f"solve took {elapsed:.1f}s"
    report(
        "end-to-end restoration",
        f"margin {margin:.3f} dB (>= 1.5, frozen floor {frozen:.3f}), {elapsed:.1f}s < 30s",
    )


def test_criterion_adaptation():
    """Monotone refine trace, grid-search parity, refine >= defaults on the fixture."""
    # 1-D toy parity against exhaustive lattice search
    psf = synth_gaussian_map(1, 1, 1, seed=0, sigma_range=(2.0, 2.0), size=13)
    truth = synthetic_scene(64, 64, seed=1)[:, :, 0]
    pair = (degrade(truth, psf, NoiseSpec(kind="gaussian", sigma=0.01, seed=2)), truth)
    step, init_mu = 2.0, 0.2

    def objective_of(mu):
        shape = (1, 1, 1, 1)
        hyper = HyperParamMap(
            mu=np.full(shape, mu, np.float32), lam=np.full(shape, 0.01, np.float32)
        )
        return evaluate_map(psf, [pair], hyper, identity_projector())

    lattice = [init_mu * step**k for k in range(-10, 11)]
    best_lattice_mu = lattice[int(np.argmax([objective_of(m) for m in lattice]))]
    init = HyperParamMap(
        mu=np.full((1, 1, 1, 1), init_mu, np.float32),
        lam=np.full((1, 1, 1, 1), 0.01, np.float32),
    )
    refined, trace = refine(
        psf,
        [pair],
        init,
        RefineConfig(max_iters=200, step_factor=step, patience=1),
        identity_projector(),
    )
    assert refined.mu[0, 0, 0, 0] == pytest.approx(best_lattice_mu, rel=1e-6)
    assert all(b >= a for a, b in zip(trace, trace[1:]))

    # refined map must not lose to the default schedule on the fixture
    truth_f, psf_f, degraded_f = _fixture_setup()
    projector = tv_projector(30)
    init_f = default_schedules(8, psf_f)
    refined_f, trace_f = refine(
        psf_f,
        [(degraded_f, truth_f)],
        init_f,
        RefineConfig(max_iters=4, step_factor=2.0, patience=1),
        projector,
    )
    assert all(b >= a for a, b in zip(trace_f, trace_f[1:]))
    assert trace_f[-1] >= trace_f[0]
    report(
        "adaptation",
        f"lattice optimum mu={best_lattice_mu:.4g} matched; fixture PSNR "
        f"{trace_f[0]:.3f} -> {trace_f[-1]:.3f} dB (non-decreasing)",
    )


def test_criterion_metrics():
    """PSNR and SSIM anchor values."""
    a = np.zeros((32, 32, 3), np.float32)
    b = np.full((32, 32, 3), 0.1, np.float32)
    value = psnr(a, b, peak=1.0)
    assert value == pytest.approx(20.0, abs=1e-6)
    img = np.random.default_rng(2).random((32, 32, 3))
    self_similarity = ssim(img, img)
    assert self_similarity == pytest.approx(1.0, abs=1e-9)
    report(
        "metrics",
        f"uniform-0.1 PSNR {value:.7f} dB (20 +- 1e-6); ssim(a,a) = {self_similarity}",
    )


def test_criterion_cli_determinism(tmp_path):
    """cmd_deconv output is bit-identical across runs and thread counts."""
    truth = synthetic_scene(96, 128, seed=30)
    write_image(tmp_path / "truth.png", truth, bits=8)
    psf = synth_gaussian_map(2, 2, 3, seed=31, sigma_range=(1.0, 2.0), size=9)
    save_psf_map(psf, tmp_path / "lens.psfm")
    base = [
        sys.executable, "-m", "deaberrate.cli",
        "degrade", "-i", str(tmp_path / "truth.png"),
        "--psf", str(tmp_path / "lens.psfm"),
        "--noise", "gaussian:0.01:seed=1", "-o", str(tmp_path / "blur.png"),
    ]
    subprocess.run(base, check=True, capture_output=True)
    outputs = []
    for name, threads in (("r1.png", 1), ("r2.png", 1), ("r4.png", 4)):
        cmd = [
            sys.executable, "-m", "deaberrate.cli",
            "deconv", "-i", str(tmp_path / "blur.png"),
            "--psf", str(tmp_path / "lens.psfm"),
            "--projector", "tv", "--stages", "4", "--tv-iters", "10",
            "--threads", str(threads), "-o", str(tmp_path / name),
        ]
        run = subprocess.run(cmd, capture_output=True, text=True)
        assert run.returncode == 0, run.stderr
        outputs.append((tmp_path / name).read_bytes())
    assert outputs[0] == outputs[1] == outputs[2]
    report("determinism", "deconv bytes identical across reruns and --threads {1,4}")


def test_criterion_cnn_fixture_coverage():
    """The CNN projector path runs from checked-in weights, no trainer needed."""
    import json

    meta = json.loads(fixture_path("golden_io.json").read_text())
    golden_in = np.fromfile(fixture_path("golden_input.bin"), dtype="<f4").reshape(
        meta["input_shape"]
    )
    golden_out = np.fromfile(fixture_path("golden_output.bin"), dtype="<f4").reshape(
        meta["output_shape"]
    )
    weights = load_weights(fixture_path(meta["weights"]))
    inp = ProjectorInput(
        z_image=golden_in[:3].transpose(1, 2, 0),
        lambda_map=golden_in[3:].transpose(1, 2, 0),
    )
    from deaberrate import project_cnn

    out = project_cnn(inp, weights).transpose(2, 0, 1)
    parity = float(np.abs(out - golden_out).max())
    assert parity <= 1e-4

    zero_weights = load_weights(fixture_path("zero_small.uabc"))
    assert not project_cnn(inp, zero_weights).any()

    # whole pipeline with the CNN projector stays finite and shape-correct
    truth = synthetic_scene(64, 96, seed=40)
    psf = synth_gaussian_map(2, 2, 3, seed=41, sigma_range=(1.0, 2.0), size=9)
    degraded = degrade(truth, psf, NoiseSpec(kind="gaussian", sigma=0.01, seed=42))
    config = SolverConfig(
        stages=2, hyper=default_schedules(2, psf), projector=cnn_projector(weights)
    )
    restored = solve(degraded, psf, config)
    assert restored.shape == truth.shape
    assert np.isfinite(restored).all()
    report(
        "cnn fixture coverage",
        f"golden parity max-abs {parity:.2e} <= 1e-4; zero weights -> zero output",
    )
