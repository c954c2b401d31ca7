"""Differentiable restoration pipeline unrolled for training.

Mirrors the engine's loop: chop into padded patches, closed-form
frequency-domain data updates per patch/channel, shave/assemble, then the
projector network on the whole image.  Cell sizes are uniform here because
training crops are chosen divisible by the PSF sub-grid.
"""

from __future__ import annotations

import torch
import torch.nn.functional as F


def chop(images: torch.Tensor, rows: int, cols: int, pad: int) -> torch.Tensor:
    """(B, C, H, W) -> (B, cells, C, cell_h + 2*pad, cell_w + 2*pad)."""
    b, c, h, w = images.shape
    cell_h, cell_w = h // rows, w // cols
    padded = F.pad(images, (pad, pad, pad, pad), mode="replicate")
    patches = []
    for r in range(rows):
        for col in range(cols):
            patches.append(
                padded[
                    :,
                    :,
                    r * cell_h : (r + 1) * cell_h + 2 * pad,
                    col * cell_w : (col + 1) * cell_w + 2 * pad,
                ]
            )
    return torch.stack(patches, dim=1)


def assemble(patches: torch.Tensor, rows: int, cols: int, pad: int) -> torch.Tensor:
    """Inverse of chop: crop each patch core and tile them back."""
    b, cells, c, ph, pw = patches.shape
    cell_h, cell_w = ph - 2 * pad, pw - 2 * pad
    out = patches.new_empty((b, c, rows * cell_h, cols * cell_w))
    for idx in range(cells):
        r, col = divmod(idx, cols)
        core = patches[:, idx, :, pad : pad + cell_h, pad : pad + cell_w]
        out[:, :, r * cell_h : (r + 1) * cell_h, col * cell_w : (col + 1) * cell_w] = core
    return out


def kernel_otf(kernels: torch.Tensor, shape: tuple[int, int]) -> torch.Tensor:
    """FFT of kernels zero-padded to `shape` with the center tap at (0, 0).

    kernels: (..., kh, kw) -> complex (..., H, W).
    """
    kh, kw = kernels.shape[-2:]
    h, w = shape
    big = kernels.new_zeros(kernels.shape[:-2] + (h, w))
    big[..., :kh, :kw] = kernels
    big = torch.roll(big, shifts=(-(kh // 2), -(kw // 2)), dims=(-2, -1))
    return torch.fft.fft2(big)


def z_step(
    patch_fft: torch.Tensor,
    otf: torch.Tensor,
    x_patches: torch.Tensor,
    mu: torch.Tensor,
) -> torch.Tensor:
    """Closed-form data update; all tensors broadcast over (B, cells, C)."""
    denom = (otf.conj() * otf).real + mu
    num = otf.conj() * patch_fft + mu * torch.fft.fft2(x_patches)
    return torch.fft.ifft2(num / denom).real


def restore(
    y: torch.Tensor,
    kernels: torch.Tensor,
    net,
    log_mu: torch.Tensor,
    log_lam: torch.Tensor,
    rows: int,
    cols: int,
    pad: int,
) -> torch.Tensor:
    """Unrolled solver: y (B, 3, H, W), kernels (B, cells, 3, kh, kw).

    log_mu / log_lam have one entry per stage (spatially uniform during
    pretraining); the stage count is their length.
    """
    y_patches = chop(y, rows, cols, pad)
    otf = kernel_otf(kernels, y_patches.shape[-2:])
    patch_fft = torch.fft.fft2(y_patches)
    x = torch.zeros_like(y)
    for t in range(log_mu.shape[0]):
        mu = torch.exp(log_mu[t])
        lam = torch.exp(log_lam[t])
        x_patches = chop(x, rows, cols, pad)
        z_patches = z_step(patch_fft, otf, x_patches, mu)
        z_image = assemble(z_patches, rows, cols, pad)
        lam_map = lam.expand_as(z_image)
        x = net.project(torch.cat([z_image, lam_map], dim=1))
    return x


def degrade(
    image: torch.Tensor, kernels: torch.Tensor, sigma: float, generator=None
) -> torch.Tensor:
    """Patch-wise true convolution plus Gaussian noise (data synthesis).

    image: (3, H, W); kernels: (rows, cols, 3, kh, kw), H/W divisible by
    the grid.  Spatial context comes from neighboring cells via replicate
    padding, exactly as the engine's forward model does.
    """
    rows, cols = kernels.shape[:2]
    kh = kernels.shape[-2]
    rad = kh // 2
    _, h, w = image.shape
    cell_h, cell_w = h // rows, w // cols
    padded = F.pad(image.unsqueeze(0), (rad, rad, rad, rad), mode="replicate")[0]
    out = torch.empty_like(image)
    for r in range(rows):
        for c in range(cols):
            cell = padded[
                :,
                r * cell_h : (r + 1) * cell_h + 2 * rad,
                c * cell_w : (c + 1) * cell_w + 2 * rad,
            ]
            # conv2d is cross-correlation; flip for true convolution
            weight = torch.flip(kernels[r, c], dims=(-2, -1)).unsqueeze(1)
            blurred = F.conv2d(cell.unsqueeze(0), weight, groups=3)[0]
            out[:, r * cell_h : (r + 1) * cell_h, c * cell_w : (c + 1) * cell_w] = blurred
    if sigma > 0:
        noise = torch.randn(out.shape, generator=generator, dtype=out.dtype)
        out = out + sigma * noise
    return out
