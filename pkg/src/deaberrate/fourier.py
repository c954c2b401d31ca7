"""Closed-form frequency-domain patch updates under circular boundaries.

The quadratic data step of the splitting scheme has the per-patch solution

    z = F^-1( (conj(F_k) * F_y + mu * F(x_prev)) / (|F_k|^2 + mu) )

where F_k is the spectrum of the blur kernel circularly shifted so its
center tap sits at index (0, 0).  With x_prev = 0 this is a Wiener filter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, IllPosedError, InvalidSpec, NonFiniteError

_SINGULAR_EPS = 1e-12


@dataclass(frozen=True)
class PatchSpectra:
    """Precomputed spectra for one (patch, channel) pair."""

    kernel_fft: np.ndarray  # complex, kernel centered at the origin
    patch_fft: np.ndarray   # complex, degraded patch
    denom: np.ndarray       # |kernel_fft|^2, real

    @property
    def shape(self) -> tuple[int, int]:
        return self.patch_fft.shape


def embed_kernel(kernel: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Zero-pad a centered kernel to `shape` with its center tap at (0, 0)."""
    kh, kw = kernel.shape
    big = np.zeros(shape, dtype=np.float64)
    big[:kh, :kw] = kernel
    return np.roll(big, (-(kh // 2), -(kw // 2)), axis=(0, 1))


def precompute_spectra(patch: np.ndarray, kernel: np.ndarray) -> PatchSpectra:
    """FFTs of one degraded patch channel and its blur kernel."""
    patch = np.asarray(patch)
    kernel = np.asarray(kernel, dtype=np.float64)
    if patch.ndim != 2 or kernel.ndim != 2:
        raise DimensionMismatch("patch and kernel must be 2-D")
    if kernel.shape[0] > patch.shape[0] or kernel.shape[1] > patch.shape[1]:
        raise DimensionMismatch(
            f"kernel {kernel.shape} too large for patch {patch.shape}"
        )
    if not np.isfinite(patch).all() or not np.isfinite(kernel).all():
        raise NonFiniteError("patch or kernel contains non-finite values")
    kernel_fft = np.fft.fft2(embed_kernel(kernel, patch.shape))
    patch_fft = np.fft.fft2(patch.astype(np.float64))
    denom = (kernel_fft.conj() * kernel_fft).real
    return PatchSpectra(kernel_fft=kernel_fft, patch_fft=patch_fft, denom=denom)


def z_update(spectra: PatchSpectra, x_prev: np.ndarray, mu: float) -> np.ndarray:
    """One closed-form data-term update; returns a float32 patch."""
    if mu < 0:
        raise InvalidSpec(f"mu must be >= 0, got {mu}")
    if mu == 0 and spectra.denom.min() <= _SINGULAR_EPS:
        raise IllPosedError("mu=0 with zeros in the kernel spectrum")
    x_prev = np.asarray(x_prev)
    if x_prev.shape != spectra.shape:
        raise DimensionMismatch(
            f"x_prev {x_prev.shape} does not match spectra {spectra.shape}"
        )
    if not np.isfinite(x_prev).all():
        raise NonFiniteError("x_prev contains non-finite values")
    num = spectra.kernel_fft.conj() * spectra.patch_fft
    num = num + mu * np.fft.fft2(x_prev.astype(np.float64))
    z = np.fft.ifft2(num / (spectra.denom + mu)).real
    return z.astype(np.float32)


def wiener_init(spectra: PatchSpectra, mu: float) -> np.ndarray:
    """First-stage update with x_prev = 0; identical to a Wiener filter."""
    if mu <= 0:
        raise InvalidSpec(f"wiener_init requires mu > 0, got {mu}")
    return z_update(spectra, np.zeros(spectra.shape, dtype=np.float32), mu)
