"""Compare prior projectors inside the same iterative solver.

Identity (no prior), total variation, and the CNN projector running from a
weight file all share one interface, so swapping the prior is a one-line
change.  The CNN here uses the small random-weight fixture; train a real
one with the companion trainer package.
"""

from pathlib import Path

import numpy as np

from deaberrate import (
    NoiseSpec,
    SolverConfig,
    cnn_projector,
    default_schedules,
    degrade,
    identity_projector,
    load_weights,
    psnr,
    solve,
    synth_gaussian_map,
    synthetic_scene,
    tv_projector,
)
from deaberrate.imgio import write_image

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)
WEIGHTS = Path(__file__).parents[1] / "tests" / "fixtures" / "rand_small.uabc"

truth = synthetic_scene(192, 256, seed=11)
psf = synth_gaussian_map(2, 2, 3, seed=12, sigma_range=(1.0, 2.5), size=13)
degraded = degrade(truth, psf, NoiseSpec(kind="gaussian", sigma=0.01, seed=13))
print(f"degraded PSNR: {psnr(np.clip(degraded, 0, 1), truth):.2f} dB")

projectors = {
    "identity": identity_projector(),
    "tv": tv_projector(iterations=30),
    "cnn-untrained": cnn_projector(load_weights(WEIGHTS)),
}
for name, projector in projectors.items():
    config = SolverConfig(stages=4, hyper=default_schedules(4, psf), projector=projector)
    restored = solve(degraded, psf, config)
    print(f"{name:14s}: PSNR {psnr(restored, truth):6.2f} dB")
    write_image(OUT / f"restored_{name}.png", restored)
print(f"images written to {OUT}/ (untrained CNN output is expectedly poor)")
