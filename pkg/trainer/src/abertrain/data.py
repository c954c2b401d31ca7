"""Synthetic training data: procedural clean images and degraded crops."""

from __future__ import annotations

import numpy as np
import torch

from .pipeline import degrade


def procedural_image(height: int, width: int, seed: int) -> np.ndarray:
    """Piecewise-smooth RGB chart, float32 in [0, 1]."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    base = 0.4 + 0.3 * xx / max(width - 1, 1) + 0.15 * yy / max(height - 1, 1)
    img = np.stack([base, 0.95 * base, 1.05 * base - 0.03], axis=2)
    for _ in range(6):
        cy, cx = rng.uniform(0, height), rng.uniform(0, width)
        ay = rng.uniform(0.06, 0.22) * height
        ax = rng.uniform(0.06, 0.22) * width
        tone = rng.uniform(0.05, 0.95, size=3)
        mask = ((yy - cy) / ay) ** 2 + ((xx - cx) / ax) ** 2 <= 1.0
        img[mask] = tone
    for _ in range(5):
        r0 = int(rng.integers(0, max(1, height - 10)))
        c0 = int(rng.integers(0, max(1, width - 10)))
        r1 = r0 + int(rng.integers(8, max(9, height // 3)))
        c1 = c0 + int(rng.integers(8, max(9, width // 3)))
        img[r0 : min(r1, height), c0 : min(c1, width)] = rng.uniform(0.05, 0.95, size=3)
    for _ in range(4):
        c = int(rng.integers(0, width - 3))
        img[:, c : c + 2] = rng.uniform(0.0, 1.0)
    return np.clip(img, 0.0, 1.0).astype(np.float32)


def make_image_bank(count: int, size: int, seed: int) -> list[np.ndarray]:
    return [procedural_image(size, size, seed + i) for i in range(count)]


class PairSampler:
    """Seed-deterministic sampler of (degraded, clean, kernels) batches.

    Every sample crops one clean image and one sub-grid of a PSF map drawn
    from the library; the crop is blurred through that sub-grid so each
    batch mixes several local PSFs, patch seams included.
    """

    def __init__(
        self,
        images: list[np.ndarray],
        psf_maps: list[np.ndarray],
        crop: int,
        subgrid: tuple[int, int],
        noise_sigma: float,
        seed: int,
    ):
        if not images:
            raise ValueError("at least one clean image is required")
        if not psf_maps:
            raise ValueError("at least one PSF map is required")
        for i, img in enumerate(images):
            if img.shape[0] < crop or img.shape[1] < crop:
                raise ValueError(f"image {i} is smaller than the crop size {crop}")
        if crop % subgrid[0] or crop % subgrid[1]:
            raise ValueError(f"crop {crop} must divide evenly into the {subgrid} sub-grid")
        self.images = [torch.from_numpy(np.ascontiguousarray(im.transpose(2, 0, 1))) for im in images]
        self.psf_maps = [torch.from_numpy(m) for m in psf_maps]
        self.crop = crop
        self.subgrid = subgrid
        self.noise_sigma = noise_sigma
        self.rng = np.random.default_rng(seed)

    def batch(self, batch_size: int):
        sub_r, sub_c = self.subgrid
        ys, xs, ks = [], [], []
        for _ in range(batch_size):
            image = self.images[int(self.rng.integers(len(self.images)))]
            psf = self.psf_maps[int(self.rng.integers(len(self.psf_maps)))]
            rows, cols = psf.shape[:2]
            r0 = int(self.rng.integers(image.shape[1] - self.crop + 1))
            c0 = int(self.rng.integers(image.shape[2] - self.crop + 1))
            clean = image[:, r0 : r0 + self.crop, c0 : c0 + self.crop]
            gr = int(self.rng.integers(rows - sub_r + 1))
            gc = int(self.rng.integers(cols - sub_c + 1))
            kernels = psf[gr : gr + sub_r, gc : gc + sub_c]
            gen = torch.Generator().manual_seed(int(self.rng.integers(2**31 - 1)))
            degraded = degrade(clean, kernels, self.noise_sigma, generator=gen)
            ys.append(degraded)
            xs.append(clean)
            ks.append(kernels.reshape(-1, *kernels.shape[2:]))
        return torch.stack(ys), torch.stack(xs), torch.stack(ks)
