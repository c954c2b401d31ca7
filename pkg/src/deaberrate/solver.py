"""Iterative restoration: alternating patch-wise inversion and projection.

One run pre-computes the patch geometry and all (patch, channel) spectra,
then alternates T times between the closed-form frequency-domain data
update (per patch, per channel, with its own penalty weight mu) and a
whole-image projector call fed with the rasterized lambda map.  The first
data update starts from x = 0 and therefore equals a Wiener filter.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DimensionMismatch, InvalidSpec, NonFiniteError
from .fourier import precompute_spectra, z_update
from .projectors import ProjectorInput, project_identity
from .psf import PsfMap
from .tiles import GridGeometry, chop, plan_grid, shave_assemble

DEFAULT_STAGES = 8
DEFAULT_MU_RANGE = (1e-2, 1.0)
DEFAULT_LAMBDA_RANGE = (5e-2, 5e-3)


@dataclass(frozen=True)
class HyperParamMap:
    """Per-stage, per-patch, per-channel penalty weights.

    Both arrays have shape (stages, grid_rows, grid_cols, channels) and must
    be strictly positive and finite.
    """

    mu: np.ndarray
    lam: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=np.float32)
        lam = np.asarray(self.lam, dtype=np.float32)
        if mu.ndim != 4 or mu.shape != lam.shape:
            raise DimensionMismatch(
                f"mu {mu.shape} and lambda {lam.shape} must share a "
                "(stages, rows, cols, channels) shape"
            )
        for name, arr in (("mu", mu), ("lambda", lam)):
            if not np.isfinite(arr).all() or (arr <= 0).any():
                raise NonFiniteError(f"{name} entries must be finite and > 0")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "lam", lam)

    @property
    def stages(self) -> int:
        return self.mu.shape[0]

    @property
    def grid_shape(self) -> tuple[int, int, int]:
        return self.mu.shape[1], self.mu.shape[2], self.mu.shape[3]

    def scaled(self, kind: str, row: int, col: int, channel: int, factor: float) -> "HyperParamMap":
        """Copy with one (cell, channel) entry scaled across all stages."""
        mu, lam = self.mu.copy(), self.lam.copy()
        target = mu if kind == "mu" else lam
        target[:, row, col, channel] *= np.float32(factor)
        return HyperParamMap(mu=mu, lam=lam)


def default_schedules(
    stages: int,
    psf_map: PsfMap,
    mu_range: tuple[float, float] = DEFAULT_MU_RANGE,
    lambda_range: tuple[float, float] = DEFAULT_LAMBDA_RANGE,
) -> HyperParamMap:
    """Spatially uniform schedules, log-spaced across stages."""
    if stages < 1:
        raise InvalidSpec(f"stages must be >= 1, got {stages}")
    shape = (stages, psf_map.grid_rows, psf_map.grid_cols, psf_map.channels)
    mu = np.geomspace(mu_range[0], mu_range[1], stages, dtype=np.float64)
    lam = np.geomspace(lambda_range[0], lambda_range[1], stages, dtype=np.float64)
    return HyperParamMap(
        mu=np.broadcast_to(mu[:, None, None, None], shape).astype(np.float32),
        lam=np.broadcast_to(lam[:, None, None, None], shape).astype(np.float32),
    )


@dataclass
class SolverConfig:
    stages: int = DEFAULT_STAGES
    pad: int | None = None  # None -> kernel radius
    hyper: HyperParamMap | None = None  # None -> default_schedules
    projector: Callable[[ProjectorInput], np.ndarray] = field(default=project_identity)
    threads: int = 1


def rasterize_lambda(
    lam_stage: np.ndarray, geometry: GridGeometry, channels: int
) -> np.ndarray:
    """Expand per-cell lambda values to a full-resolution per-channel map."""
    out = np.empty((geometry.image_h, geometry.image_w, channels), dtype=np.float32)
    for r in range(geometry.grid_rows):
        for c in range(geometry.grid_cols):
            r0, r1, c0, c1 = geometry.core(r, c)
            out[r0:r1, c0:c1, :] = lam_stage[r, c, :]
    return out


def _resolve(y3: np.ndarray, psf_map: PsfMap, config: SolverConfig):
    kh, kw = psf_map.kernel_shape
    hyper = config.hyper
    if hyper is None:
        hyper = default_schedules(config.stages, psf_map)
    if hyper.stages != config.stages:
        raise InvalidSpec(
            f"schedule covers {hyper.stages} stages, config asks for {config.stages}"
        )
    if hyper.grid_shape != (psf_map.grid_rows, psf_map.grid_cols, psf_map.channels):
        raise InvalidSpec(
            f"schedule grid {hyper.grid_shape} does not cover the PSF grid"
        )
    pad = config.pad if config.pad is not None else max(kh, kw) // 2
    geometry = plan_grid(
        y3.shape[0], y3.shape[1], psf_map.grid_rows, psf_map.grid_cols, pad
    )
    min_h = min(np.diff(geometry.row_edges))
    min_w = min(np.diff(geometry.col_edges))
    if min_h < kh or min_w < kw:
        raise DimensionMismatch(
            f"smallest core patch {min_h}x{min_w} cannot hold the "
            f"{kh}x{kw} kernel"
        )
    return hyper, geometry


def solve(y: np.ndarray, psf_map: PsfMap, config: SolverConfig) -> np.ndarray:
    """Restore a degraded image given its PSF map.

    Returns float32 clamped to [0, 1]; intermediate stages are deliberately
    left unclamped so ringing structure survives for the projector.
    """
    y = np.asarray(y, dtype=np.float32)
    was_2d = y.ndim == 2
    y3 = y[:, :, None] if was_2d else y
    if y3.ndim != 3 or y3.shape[2] != psf_map.channels:
        raise DimensionMismatch(
            f"image shape {y.shape} incompatible with a "
            f"{psf_map.channels}-channel PSF map"
        )
    hyper, geometry = _resolve(y3, psf_map, config)
    rows, cols, channels = psf_map.grid_rows, psf_map.grid_cols, psf_map.channels

    y_patches = chop(y3, geometry)
    spectra = [
        [
            precompute_spectra(
                y_patches[r * cols + c][:, :, ch], psf_map.cell(r, c, ch)
            )
            for ch in range(channels)
        ]
        for r in range(rows)
        for c in range(cols)
    ]

    x = np.zeros_like(y3)
    for t in range(config.stages):
        x_patches = chop(x, geometry)
        z_patches = [np.empty_like(p) for p in x_patches]

        def cell_update(idx: int) -> None:
            for ch in range(channels):
                z_patches[idx][:, :, ch] = z_update(
                    spectra[idx][ch],
                    x_patches[idx][:, :, ch],
                    float(hyper.mu[t, idx // cols, idx % cols, ch]),
                )

        if config.threads > 1:
            with ThreadPoolExecutor(max_workers=config.threads) as pool:
                list(pool.map(cell_update, range(len(z_patches))))
        else:
            for idx in range(len(z_patches)):
                cell_update(idx)

        z_img = shave_assemble(z_patches, geometry)
        lam_map = rasterize_lambda(hyper.lam[t], geometry, channels)
        x = np.asarray(
            config.projector(ProjectorInput(z_image=z_img, lambda_map=lam_map)),
            dtype=np.float32,
        )
        if x.shape != y3.shape:
            raise DimensionMismatch(
                f"projector returned shape {x.shape}, expected {y3.shape}"
            )

    x = np.clip(x, 0.0, 1.0)
    return x[:, :, 0] if was_2d else x
