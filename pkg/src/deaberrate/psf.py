"""Spatially varying PSF maps: synthesis, validation and serialization.

A PSF map is a regular grid of blur kernels, one kernel per image patch and
color channel.  Kernels are stored energy-normalized (sum of taps = 1) so
that blurring preserves average brightness.  Maps are serialized in the
PSFM binary format documented next to :func:`save_psf_map`.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, FormatError, InvalidSpec

# |sum(taps) - 1| tolerated on an already-normalized kernel.
KERNEL_SUM_TOL = 1e-6
# Raw sums accepted from external files before renormalization kicks in.
LOOSE_SUM_RANGE = (0.9, 1.1)

_PSFM_MAGIC = b"PSFM"
_PSFM_VERSION = 1
_PSFM_HEADER = struct.Struct("<6I")  # version, rows, cols, channels, kh, kw


@dataclass(frozen=True)
class GaussianSpec:
    """Parameters of a rotated anisotropic Gaussian kernel.

    sigma_x / sigma_y are the standard deviations (in pixels) along the
    rotated axes, theta is the rotation in radians, size the odd side
    length of the sampled kernel.
    """

    sigma_x: float
    sigma_y: float
    theta: float = 0.0
    size: int = 25

    def validate(self) -> None:
        if self.size < 3 or self.size % 2 == 0:
            raise InvalidSpec(f"kernel size must be odd and >= 3, got {self.size}")
        if self.sigma_x <= 0 or self.sigma_y <= 0:
            raise InvalidSpec(
                f"sigmas must be positive, got ({self.sigma_x}, {self.sigma_y})"
            )


def normalize_kernel(taps: np.ndarray) -> np.ndarray:
    """Divide taps by their sum.  A zero (or non-finite) sum is an error."""
    taps = np.asarray(taps, dtype=np.float64)
    total = taps.sum()
    if not np.isfinite(total) or abs(total) < 1e-12:
        raise InvalidSpec(f"kernel sum {total} cannot be normalized")
    return taps / total


def synth_gaussian(spec: GaussianSpec) -> np.ndarray:
    """Sample a rotated anisotropic Gaussian kernel.

    The density is point-sampled at tap centers on an integer grid centered
    on the middle tap, then normalized to sum 1.  Returned as float64 with
    shape (size, size).
    """
    spec.validate()
    r = spec.size // 2
    y, x = np.mgrid[-r : r + 1, -r : r + 1].astype(np.float64)
    ct, st = np.cos(spec.theta), np.sin(spec.theta)
    u = ct * x + st * y
    v = -st * x + ct * y
    taps = np.exp(-0.5 * ((u / spec.sigma_x) ** 2 + (v / spec.sigma_y) ** 2))
    return normalize_kernel(taps)


def _validate_kernels(kernels: np.ndarray) -> None:
    if kernels.dtype == object or kernels.ndim != 5:
        raise DimensionMismatch(
            "kernels must form a dense (rows, cols, channels, kh, kw) array; "
            "mixed kernel sizes are not supported"
        )
    rows, cols, channels, kh, kw = kernels.shape
    if rows < 1 or cols < 1:
        raise DimensionMismatch(f"grid must be at least 1x1, got {rows}x{cols}")
    if channels not in (1, 3):
        raise DimensionMismatch(f"channels must be 1 or 3, got {channels}")
    if kh % 2 == 0 or kw % 2 == 0 or kh < 1 or kw < 1:
        raise DimensionMismatch(f"kernel dims must be odd, got {kh}x{kw}")
    if not np.isfinite(kernels).all():
        raise InvalidSpec("kernel taps contain non-finite values")
    sums = kernels.sum(axis=(3, 4), dtype=np.float64)
    if np.abs(sums - 1.0).max() > KERNEL_SUM_TOL:
        raise InvalidSpec(
            f"kernels must be normalized to sum 1 within {KERNEL_SUM_TOL}"
        )


@dataclass(frozen=True)
class PsfMap:
    """Grid of per-patch, per-channel blur kernels.

    ``kernels`` has shape (grid_rows, grid_cols, channels, kh, kw), float32,
    with every cell normalized and all cells sharing one kernel size.
    """

    kernels: np.ndarray

    def __post_init__(self):
        try:
            kernels = np.asarray(self.kernels, dtype=np.float32)
        except (ValueError, TypeError) as exc:
            raise DimensionMismatch(
                "kernels must form a dense (rows, cols, channels, kh, kw) array; "
                "mixed kernel sizes are not supported"
            ) from exc
        _validate_kernels(kernels)
        object.__setattr__(self, "kernels", kernels)

    @property
    def grid_rows(self) -> int:
        return self.kernels.shape[0]

    @property
    def grid_cols(self) -> int:
        return self.kernels.shape[1]

    @property
    def channels(self) -> int:
        return self.kernels.shape[2]

    @property
    def kernel_shape(self) -> tuple[int, int]:
        return self.kernels.shape[3], self.kernels.shape[4]

    def cell(self, row: int, col: int, channel: int) -> np.ndarray:
        return self.kernels[row, col, channel]


def delta_psf_map(rows: int, cols: int, channels: int = 3, size: int = 25) -> PsfMap:
    """Map of identity (delta) kernels, useful as a no-blur baseline."""
    if size % 2 == 0:
        raise InvalidSpec(f"kernel size must be odd, got {size}")
    kernels = np.zeros((rows, cols, channels, size, size), dtype=np.float32)
    kernels[..., size // 2, size // 2] = 1.0
    return PsfMap(kernels)


def synth_gaussian_map(
    rows: int,
    cols: int,
    channels: int,
    seed: int,
    sigma_range: tuple[float, float],
    size: int = 25,
) -> PsfMap:
    """Synthesize a deterministic map of anisotropic Gaussian kernels.

    Per-cell, per-channel sigmas and orientation are drawn uniformly from
    ``sigma_range`` and [0, pi); each channel draws independently so the map
    carries chromatic variation.  Identical seeds give bit-identical maps.
    """
    lo, hi = float(sigma_range[0]), float(sigma_range[1])
    if lo > hi:
        raise InvalidSpec(f"sigma_range min {lo} exceeds max {hi}")
    if lo <= 0:
        raise InvalidSpec(f"sigma_range must be positive, got {sigma_range}")
    if rows < 1 or cols < 1:
        raise InvalidSpec(f"grid must be at least 1x1, got {rows}x{cols}")
    rng = np.random.default_rng(seed)
    kernels = np.empty((rows, cols, channels, size, size), dtype=np.float32)
    for r in range(rows):
        for c in range(cols):
            for ch in range(channels):
                spec = GaussianSpec(
                    sigma_x=rng.uniform(lo, hi),
                    sigma_y=rng.uniform(lo, hi),
                    theta=rng.uniform(0.0, np.pi),
                    size=size,
                )
                kernels[r, c, ch] = synth_gaussian(spec).astype(np.float32)
    return PsfMap(kernels)


def save_psf_map(psf_map: PsfMap, path: str | Path) -> None:
    """Write a map in the PSFM binary format.

    Layout (little-endian): magic ``PSFM``, version u32=1, grid_rows u32,
    grid_cols u32, channels u32, kernel_h u32, kernel_w u32, then
    rows*cols*channels*kh*kw float32 taps, cell-major (row, col, channel).
    """
    kernels = np.asarray(psf_map.kernels)
    _validate_kernels(kernels)
    rows, cols, channels, kh, kw = kernels.shape
    payload = np.ascontiguousarray(kernels, dtype="<f4").tobytes()
    header = _PSFM_MAGIC + _PSFM_HEADER.pack(_PSFM_VERSION, rows, cols, channels, kh, kw)
    Path(path).write_bytes(header + payload)


def load_psf_map(path: str | Path) -> PsfMap:
    """Read a PSFM file.  Round-trips written by :func:`save_psf_map` bit-exactly.

    Kernels whose raw sums fall inside ``LOOSE_SUM_RANGE`` but outside the
    strict tolerance are renormalized; anything further off is rejected.
    """
    data = Path(path).read_bytes()
    if len(data) < 4 or data[:4] != _PSFM_MAGIC:
        raise FormatError("not a PSFM file (bad magic)", offset=0)
    if len(data) < 4 + _PSFM_HEADER.size:
        raise FormatError("truncated PSFM header", offset=len(data))
    version, rows, cols, channels, kh, kw = _PSFM_HEADER.unpack_from(data, 4)
    if version != _PSFM_VERSION:
        raise FormatError(f"unsupported PSFM version {version}", offset=4)
    if rows < 1 or cols < 1 or channels not in (1, 3) or kh % 2 == 0 or kw % 2 == 0:
        raise DimensionMismatch(
            f"invalid PSFM dimensions rows={rows} cols={cols} "
            f"channels={channels} kernel={kh}x{kw}"
        )
    body = 4 + _PSFM_HEADER.size
    count = rows * cols * channels * kh * kw
    expected = body + 4 * count
    if len(data) < expected:
        raise FormatError(
            f"truncated PSFM payload, expected {expected} bytes", offset=len(data)
        )
    if len(data) > expected:
        raise FormatError("trailing bytes after PSFM payload", offset=expected)
    taps = (
        np.frombuffer(data, dtype="<f4", count=count, offset=body)
        .reshape(rows, cols, channels, kh, kw)
        .copy()
    )
    sums = taps.sum(axis=(3, 4), dtype=np.float64)
    if np.abs(sums - 1.0).max() > KERNEL_SUM_TOL:
        lo, hi = LOOSE_SUM_RANGE
        bad = (sums < lo) | (sums > hi)
        if bad.any():
            r, c, ch = np.argwhere(bad)[0]
            cell_index = (r * cols + c) * channels + ch
            raise FormatError(
                f"kernel sum {sums[r, c, ch]:.4f} outside [{lo}, {hi}] "
                f"at cell ({r}, {c}, channel {ch})",
                offset=body + int(cell_index) * kh * kw * 4,
            )
        taps = (taps.astype(np.float64) / sums[..., None, None]).astype(np.float32)
    return PsfMap(taps)
