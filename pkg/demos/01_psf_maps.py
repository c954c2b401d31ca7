"""Synthesize a spatially varying PSF map and inspect it.

Builds a grid of anisotropic Gaussian kernels (one per patch cell and
color channel), saves it in the PSFM binary format, reloads it, and writes
a montage image so you can see how the blur varies across the field.
"""

from pathlib import Path

import numpy as np

from deaberrate import load_psf_map, save_psf_map, synth_gaussian_map
from deaberrate.imgio import write_image

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

# A desk-scale 4x4 grid; a production lens map would normally use 16x16
# cells with 25x25 kernels.
psf = synth_gaussian_map(rows=4, cols=4, channels=3, seed=7, sigma_range=(0.8, 3.0), size=25)
path = OUT / "demo_lens.psfm"
save_psf_map(psf, path)
print(f"saved {path} ({path.stat().st_size} bytes)")

reloaded = load_psf_map(path)
assert np.array_equal(reloaded.kernels, psf.kernels)
print("reload round-trip is bit-exact")

# montage: one tile per cell, kernels rendered per channel (RGB)
kh, kw = psf.kernel_shape
montage = np.zeros((4 * (kh + 2), 4 * (kw + 2), 3), dtype=np.float32)
for r in range(4):
    for c in range(4):
        tile = np.stack([psf.cell(r, c, ch) for ch in range(3)], axis=2)
        tile = tile / tile.max()
        montage[
            r * (kh + 2) + 1 : r * (kh + 2) + 1 + kh,
            c * (kw + 2) + 1 : c * (kw + 2) + 1 + kw,
        ] = tile
write_image(OUT / "psf_montage.png", montage)
print(f"kernel sums: min {psf.kernels.sum(axis=(3, 4)).min():.6f}, "
      f"max {psf.kernels.sum(axis=(3, 4)).max():.6f}")
print(f"wrote {OUT / 'psf_montage.png'}")
