"""Prior-imposition operators: identity, weighted-TV proximal, CNN inference.

All projectors share one calling convention: they receive the assembled
intermediate image together with a full-resolution map of per-pixel prior
strengths (lambda) and return an image of identical shape.  The CNN path
runs a residual encoder-decoder from weights stored in the UABC binary
format; the network consumes 6 channels (image + lambda map) and emits 3.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import DimensionMismatch, FormatError, NonFiniteError, ShapeMismatch

_UABC_MAGIC = b"UABC"
_UABC_VERSION = 1

# Step size for the dual ascent; 1/8 bounds the squared norm of the
# discrete gradient operator, which guarantees convergence.
_TV_DUAL_STEP = 0.125


@dataclass(frozen=True)
class ProjectorInput:
    """Assembled image plus the per-pixel prior-strength map."""

    z_image: np.ndarray    # (H, W, C) float
    lambda_map: np.ndarray  # (H, W, C), strictly positive

    def __post_init__(self):
        z = np.asarray(self.z_image, dtype=np.float32)
        lam = np.asarray(self.lambda_map, dtype=np.float32)
        if z.ndim != 3 or lam.shape != z.shape:
            raise DimensionMismatch(
                f"z_image {z.shape} and lambda_map {lam.shape} must be "
                "3-D arrays of identical shape"
            )
        if not np.isfinite(z).all():
            raise NonFiniteError("z_image contains non-finite values")
        if not np.isfinite(lam).all() or (lam <= 0).any():
            raise NonFiniteError("lambda_map must be finite and > 0")
        object.__setattr__(self, "z_image", z)
        object.__setattr__(self, "lambda_map", lam)


def project_identity(inp: ProjectorInput) -> np.ndarray:
    """No-op prior; returns the image unchanged (baseline for ablations)."""
    return inp.z_image


def _tv_grad(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    gr = np.zeros_like(x)
    gc = np.zeros_like(x)
    gr[:-1, :] = x[1:, :] - x[:-1, :]
    gc[:, :-1] = x[:, 1:] - x[:, :-1]
    return gr, gc


def _tv_div(pr: np.ndarray, pc: np.ndarray) -> np.ndarray:
    div = np.zeros_like(pr)
    div[0, :] = pr[0, :]
    div[1:-1, :] = pr[1:-1, :] - pr[:-2, :]
    div[-1, :] = -pr[-2, :]
    div[:, 0] += pc[:, 0]
    div[:, 1:-1] += pc[:, 1:-1] - pc[:, :-2]
    div[:, -1] += -pc[:, -2]
    return div


def project_tv(inp: ProjectorInput, iterations: int = 30) -> np.ndarray:
    """Proximal step of weighted isotropic total variation.

    Approximates argmin_x 0.5*||x - z||^2 + sum_ij lambda_ij * |grad(x)_ij|
    per channel by projected dual ascent: the dual variable is constrained
    to a per-pixel disc of radius lambda_ij and x = z + div(p).
    """
    if iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {iterations}")
    z = inp.z_image
    out = np.empty_like(z)
    for ch in range(z.shape[2]):
        g = z[:, :, ch].astype(np.float64)
        lam = inp.lambda_map[:, :, ch].astype(np.float64)
        pr = np.zeros_like(g)
        pc = np.zeros_like(g)
        for _ in range(iterations):
            gr, gc = _tv_grad(g + _tv_div(pr, pc))
            pr += _TV_DUAL_STEP * gr
            pc += _TV_DUAL_STEP * gc
            norm = np.sqrt(pr * pr + pc * pc)
            scale = np.maximum(1.0, norm / lam)
            pr /= scale
            pc /= scale
        out[:, :, ch] = (g + _tv_div(pr, pc)).astype(np.float32)
    return out


# ---------------------------------------------------------------------------
# CNN projector: residual encoder-decoder, weights from UABC files
# ---------------------------------------------------------------------------

IN_CHANNELS = 6
OUT_CHANNELS = 3
DEFAULT_WIDTHS = (32, 64, 128)
DEFAULT_BLOCKS = 2


@dataclass(frozen=True)
class CnnArch:
    """Architecture descriptor stored in the UABC header."""

    scales: int
    widths: tuple[int, ...]
    blocks_per_scale: int

    def __post_init__(self):
        if self.scales < 1 or len(self.widths) != self.scales:
            raise ShapeMismatch(
                f"widths {self.widths} must list one width per scale ({self.scales})"
            )
        if self.blocks_per_scale < 1 or any(w < 1 for w in self.widths):
            raise ShapeMismatch("widths and blocks_per_scale must be positive")

    def tensor_shapes(self) -> dict[str, tuple[int, ...]]:
        """Expected tensor names and shapes, in canonical file order.

        Convolution weights use (out_channels, in_channels, 3, 3) layout and
        are applied as cross-correlation.
        """
        w = self.widths
        shapes: dict[str, tuple[int, ...]] = {}

        def conv(name: str, cout: int, cin: int) -> None:
            shapes[f"{name}.weight"] = (cout, cin, 3, 3)
            shapes[f"{name}.bias"] = (cout,)

        def blocks(prefix: str, ch: int) -> None:
            for b in range(self.blocks_per_scale):
                conv(f"{prefix}.block{b}.conv1", ch, ch)
                conv(f"{prefix}.block{b}.conv2", ch, ch)

        conv("head", w[0], IN_CHANNELS)
        for s in range(self.scales):
            blocks(f"enc{s}", w[s])
            if s < self.scales - 1:
                conv(f"down{s}", w[s + 1], w[s])
        for s in range(self.scales - 2, -1, -1):
            conv(f"up{s}", w[s], w[s + 1])
            conv(f"fuse{s}", w[s], 2 * w[s])
            blocks(f"dec{s}", w[s])
        conv("tail", OUT_CHANNELS, w[0])
        return shapes


@dataclass(frozen=True)
class CnnWeights:
    arch: CnnArch
    tensors: dict[str, np.ndarray]

    def __post_init__(self):
        expected = self.arch.tensor_shapes()
        for name, shape in expected.items():
            if name not in self.tensors:
                raise ShapeMismatch(f"missing tensor {name!r}")
            got = self.tensors[name]
            if tuple(got.shape) != shape:
                raise ShapeMismatch(
                    f"tensor {name!r} has shape {tuple(got.shape)}, expected {shape}"
                )
        extra = set(self.tensors) - set(expected)
        if extra:
            raise ShapeMismatch(f"unexpected tensors: {sorted(extra)}")
        tensors = {
            name: np.ascontiguousarray(self.tensors[name], dtype=np.float32)
            for name in expected
        }
        object.__setattr__(self, "tensors", tensors)


def init_weights(arch: CnnArch, seed: int | None = None) -> CnnWeights:
    """All-zero weights, or seeded He-style random weights when seed is given."""
    rng = np.random.default_rng(seed) if seed is not None else None
    tensors = {}
    for name, shape in arch.tensor_shapes().items():
        if rng is None or name.endswith(".bias"):
            tensors[name] = np.zeros(shape, dtype=np.float32)
        else:
            fan_in = int(np.prod(shape[1:]))
            std = np.sqrt(2.0 / fan_in)
            tensors[name] = (rng.standard_normal(shape) * std).astype(np.float32)
    return CnnWeights(arch=arch, tensors=tensors)


def save_weights(weights: CnnWeights, path: str | Path) -> None:
    """Write weights in the UABC binary format.

    Layout (little-endian): magic ``UABC``, version u32=1, scales u32,
    widths u32[scales], blocks_per_scale u32, tensor_count u32, then per
    tensor: name_len u32, name (UTF-8), rank u32, dims u32[rank], float32
    data row-major.  Tensor order is the canonical order of
    :meth:`CnnArch.tensor_shapes`.
    """
    arch = weights.arch
    parts = [
        _UABC_MAGIC,
        struct.pack("<2I", _UABC_VERSION, arch.scales),
        struct.pack(f"<{arch.scales}I", *arch.widths),
        struct.pack("<2I", arch.blocks_per_scale, len(weights.tensors)),
    ]
    for name in arch.tensor_shapes():
        data = weights.tensors[name]
        raw = name.encode("utf-8")
        parts.append(struct.pack("<I", len(raw)))
        parts.append(raw)
        parts.append(struct.pack(f"<{1 + data.ndim}I", data.ndim, *data.shape))
        parts.append(np.ascontiguousarray(data, dtype="<f4").tobytes())
    Path(path).write_bytes(b"".join(parts))


def load_weights(path: str | Path) -> CnnWeights:
    """Read a UABC file; shape errors name the offending tensor."""
    data = Path(path).read_bytes()
    pos = 0

    def take(fmt: str, what: str):
        nonlocal pos
        size = struct.calcsize(fmt)
        if pos + size > len(data):
            raise FormatError(f"truncated UABC file while reading {what}", offset=len(data))
        values = struct.unpack_from(fmt, data, pos)
        pos += size
        return values

    if len(data) < 4 or data[:4] != _UABC_MAGIC:
        raise FormatError("not a UABC file (bad magic)", offset=0)
    pos = 4
    (version,) = take("<I", "version")
    if version != _UABC_VERSION:
        raise FormatError(f"unsupported UABC version {version}", offset=4)
    (scales,) = take("<I", "scales")
    if scales < 1 or scales > 16:
        raise FormatError(f"implausible scale count {scales}", offset=pos - 4)
    widths = take(f"<{scales}I", "widths")
    blocks_per_scale, tensor_count = take("<2I", "arch block")
    arch = CnnArch(scales=scales, widths=tuple(widths), blocks_per_scale=blocks_per_scale)
    tensors: dict[str, np.ndarray] = {}
    for _ in range(tensor_count):
        (name_len,) = take("<I", "tensor name length")
        if pos + name_len > len(data):
            raise FormatError("truncated UABC tensor name", offset=len(data))
        name = data[pos : pos + name_len].decode("utf-8")
        pos += name_len
        (rank,) = take("<I", f"rank of {name!r}")
        dims = take(f"<{rank}I", f"dims of {name!r}")
        count = int(np.prod(dims, dtype=np.int64)) if rank else 1
        end = pos + 4 * count
        if end > len(data):
            raise ShapeMismatch(
                f"tensor {name!r} is truncated: need {4 * count} bytes, "
                f"have {len(data) - pos}"
            )
        tensors[name] = (
            np.frombuffer(data, dtype="<f4", count=count, offset=pos)
            .reshape(dims)
            .copy()
        )
        pos = end
    if pos != len(data):
        raise FormatError("trailing bytes after UABC payload", offset=pos)
    return CnnWeights(arch=arch, tensors=tensors)


def _conv2d(x: np.ndarray, w: np.ndarray, b: np.ndarray, stride: int = 1) -> np.ndarray:
    """3x3 cross-correlation with zero padding 1, channels-first layout."""
    xp = np.pad(x, ((0, 0), (1, 1), (1, 1)))
    win = sliding_window_view(xp, (3, 3), axis=(1, 2))  # (C, H, W, 3, 3)
    if stride != 1:
        win = win[:, ::stride, ::stride]
    ho, wo = win.shape[1], win.shape[2]
    cols = win.transpose(1, 2, 0, 3, 4).reshape(ho * wo, -1)
    out = cols @ w.reshape(w.shape[0], -1).T + b
    return np.ascontiguousarray(out.reshape(ho, wo, -1).transpose(2, 0, 1))


def _upsample2(x: np.ndarray) -> np.ndarray:
    return x.repeat(2, axis=1).repeat(2, axis=2)


class _Forward:
    """Single forward pass with per-layer finiteness checks."""

    def __init__(self, weights: CnnWeights):
        self.t = weights.tensors
        self.arch = weights.arch

    def conv(self, name: str, x: np.ndarray, stride: int = 1, relu: bool = True):
        out = _conv2d(x, self.t[f"{name}.weight"], self.t[f"{name}.bias"], stride)
        if relu:
            np.maximum(out, 0.0, out=out)
        if not np.isfinite(out).all():
            raise NonFiniteError(f"non-finite activation after layer {name!r}")
        return out

    def res_blocks(self, prefix: str, x: np.ndarray) -> np.ndarray:
        for b in range(self.arch.blocks_per_scale):
            t = self.conv(f"{prefix}.block{b}.conv1", x)
            t = self.conv(f"{prefix}.block{b}.conv2", t, relu=False)
            x = np.maximum(x + t, 0.0)
        return x

    def run(self, x: np.ndarray) -> np.ndarray:
        arch = self.arch
        feats = self.conv("head", x)
        skips = []
        for s in range(arch.scales):
            feats = self.res_blocks(f"enc{s}", feats)
            if s < arch.scales - 1:
                skips.append(feats)
                feats = self.conv(f"down{s}", feats, stride=2)
        for s in range(arch.scales - 2, -1, -1):
            feats = self.conv(f"up{s}", _upsample2(feats))
            feats = self.conv(f"fuse{s}", np.concatenate([feats, skips[s]], axis=0))
            feats = self.res_blocks(f"dec{s}", feats)
        return self.conv("tail", feats, relu=False)


def project_cnn(inp: ProjectorInput, weights: CnnWeights) -> np.ndarray:
    """Forward pass of the learned projector.

    The image and lambda map are concatenated to a 6-channel tensor,
    replicate-padded so both dims divide 2**(scales-1), run through the
    network and cropped back, so any input size is accepted.
    """
    z = inp.z_image
    if z.shape[2] != OUT_CHANNELS:
        raise DimensionMismatch(
            f"CNN projector expects {OUT_CHANNELS}-channel images, got {z.shape[2]}"
        )
    h, w = z.shape[:2]
    x = np.concatenate([z, inp.lambda_map], axis=2).transpose(2, 0, 1)
    x = np.ascontiguousarray(x, dtype=np.float32)
    div = 2 ** (weights.arch.scales - 1)
    pad_h = (-h) % div
    pad_w = (-w) % div
    if pad_h or pad_w:
        x = np.pad(x, ((0, 0), (0, pad_h), (0, pad_w)), mode="edge")
    out = _Forward(weights).run(x)
    return np.ascontiguousarray(out[:, :h, :w].transpose(1, 2, 0))


# ---------------------------------------------------------------------------
# Projector factories (what the solver and the CLI hand around)
# ---------------------------------------------------------------------------

def identity_projector():
    return project_identity


def tv_projector(iterations: int = 30):
    def run(inp: ProjectorInput) -> np.ndarray:
        return project_tv(inp, iterations=iterations)

    return run


def cnn_projector(weights: CnnWeights):
    def run(inp: ProjectorInput) -> np.ndarray:
        return project_cnn(inp, weights)

    return run
