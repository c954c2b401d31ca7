"""Patch-wise degradation model and synthetic pair generation.

Blur is applied per patch and per channel with the cell's kernel: each
padded patch (context replicated at image borders) is convolved with the
true 2-D convolution, shaved and written back, then noise is added.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.signal import fftconvolve

from .errors import DimensionMismatch, InvalidSpec
from .psf import PsfMap
from .tiles import chop, plan_grid, shave_assemble


@dataclass(frozen=True)
class NoiseSpec:
    kind: str = "none"  # "none" or "gaussian"
    sigma: float = 0.0  # on the [0, 1] intensity scale
    seed: int = 0

    def validate(self) -> None:
        if self.kind not in ("none", "gaussian"):
            raise InvalidSpec(f"unknown noise kind {self.kind!r}")
        if self.sigma < 0:
            raise InvalidSpec(f"noise sigma must be >= 0, got {self.sigma}")


class PairSample(NamedTuple):
    degraded: np.ndarray
    truth: np.ndarray
    psf: PsfMap


def _as_3d(image: np.ndarray) -> tuple[np.ndarray, bool]:
    image = np.asarray(image)
    if image.ndim == 2:
        return image[:, :, None], True
    if image.ndim == 3:
        return image, False
    raise DimensionMismatch(f"expected 2-D or 3-D image, got ndim={image.ndim}")


def _check_channels(image3: np.ndarray, psf_map: PsfMap) -> None:
    if image3.shape[2] != psf_map.channels:
        raise DimensionMismatch(
            f"image has {image3.shape[2]} channels, PSF map has {psf_map.channels}"
        )


def degrade(
    image: np.ndarray, psf_map: PsfMap, noise: NoiseSpec = NoiseSpec()
) -> np.ndarray:
    """Apply the patch-wise, channel-wise blur model plus optional noise.

    Delta kernels with noise "none" return the input bit-exactly.  Output is
    float32 and deliberately not clipped; quantization happens at file I/O.
    """
    noise.validate()
    image3, was_2d = _as_3d(image)
    _check_channels(image3, psf_map)
    kh, kw = psf_map.kernel_shape
    pad = max(kh, kw) // 2
    geometry = plan_grid(
        image3.shape[0], image3.shape[1], psf_map.grid_rows, psf_map.grid_cols, pad
    )
    patches = chop(image3, geometry)
    blurred = []
    for r in range(psf_map.grid_rows):
        for c in range(psf_map.grid_cols):
            patch = patches[r * psf_map.grid_cols + c]
            out = np.empty_like(patch, dtype=np.float32)
            for ch in range(psf_map.channels):
                kernel = psf_map.cell(r, c, ch).astype(np.float64)
                out[:, :, ch] = fftconvolve(
                    patch[:, :, ch].astype(np.float64), kernel, mode="same"
                ).astype(np.float32)
            blurred.append(out)
    result = shave_assemble(blurred, geometry)
    if noise.kind == "gaussian" and noise.sigma > 0:
        rng = np.random.default_rng(noise.seed)
        result = result + rng.standard_normal(result.shape).astype(np.float32) * np.float32(
            noise.sigma
        )
    return result[:, :, 0] if was_2d else result


def make_pair_set(
    count: int,
    image_source: Sequence[np.ndarray],
    psf_map: PsfMap,
    noise: NoiseSpec,
    crop: int,
    subgrid: tuple[int, int] = (2, 2),
) -> list[PairSample]:
    """Deterministic (degraded, truth, psf crop) triples for tests and tuning.

    Each sample randomly crops one source image and a sub-grid of the PSF
    map; the crop is degraded through the sub-grid so it shows
    ``subgrid[0] * subgrid[1]`` regions with different PSFs.  ``noise.seed``
    seeds the whole drawing, so equal seeds give identical triples.
    """
    noise.validate()
    if count < 0:
        raise InvalidSpec(f"count must be >= 0, got {count}")
    sub_r, sub_c = subgrid
    if sub_r < 1 or sub_c < 1:
        raise InvalidSpec(f"subgrid must be at least 1x1, got {subgrid}")
    if sub_r > psf_map.grid_rows or sub_c > psf_map.grid_cols:
        raise InvalidSpec(
            f"subgrid {subgrid} exceeds PSF grid "
            f"{psf_map.grid_rows}x{psf_map.grid_cols}"
        )
    if count == 0:
        return []
    if not image_source:
        raise InvalidSpec("image_source is empty")
    for i, img in enumerate(image_source):
        if img.shape[0] < crop or img.shape[1] < crop:
            raise InvalidSpec(
                f"source image {i} of shape {img.shape[:2]} is smaller "
                f"than crop {crop}"
            )
    rng = np.random.default_rng(noise.seed)
    pairs = []
    for _ in range(count):
        img = image_source[int(rng.integers(len(image_source)))]
        r0 = int(rng.integers(img.shape[0] - crop + 1))
        c0 = int(rng.integers(img.shape[1] - crop + 1))
        truth = np.asarray(img[r0 : r0 + crop, c0 : c0 + crop], dtype=np.float32)
        gr = int(rng.integers(psf_map.grid_rows - sub_r + 1))
        gc = int(rng.integers(psf_map.grid_cols - sub_c + 1))
        sub = PsfMap(psf_map.kernels[gr : gr + sub_r, gc : gc + sub_c])
        sample_noise = NoiseSpec(
            kind=noise.kind, sigma=noise.sigma, seed=int(rng.integers(2**31 - 1))
        )
        pairs.append(
            PairSample(degraded=degrade(truth, sub, sample_noise), truth=truth, psf=sub)
        )
    return pairs
