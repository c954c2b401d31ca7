"""Binary interchange formats: PSFM maps in, UABC weights out.

These are independent implementations of the formats the restoration
engine speaks; nothing here imports the engine.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

PSFM_MAGIC = b"PSFM"
UABC_MAGIC = b"UABC"


class FormatError(ValueError):
    pass


def read_psf_map(path: str | Path) -> np.ndarray:
    """Read a PSFM file into a (rows, cols, channels, kh, kw) float32 array."""
    data = Path(path).read_bytes()
    if data[:4] != PSFM_MAGIC:
        raise FormatError(f"{path}: not a PSFM file")
    version, rows, cols, channels, kh, kw = struct.unpack_from("<6I", data, 4)
    if version != 1:
        raise FormatError(f"{path}: unsupported PSFM version {version}")
    count = rows * cols * channels * kh * kw
    if len(data) != 28 + 4 * count:
        raise FormatError(f"{path}: payload size mismatch")
    taps = np.frombuffer(data, dtype="<f4", count=count, offset=28)
    return taps.reshape(rows, cols, channels, kh, kw).copy()


def tensor_names(scales: int, widths: tuple[int, ...], blocks_per_scale: int) -> list[str]:
    """Canonical tensor order of the UABC format."""
    names: list[str] = []

    def conv(prefix: str) -> None:
        names.append(f"{prefix}.weight")
        names.append(f"{prefix}.bias")

    def blocks(prefix: str) -> None:
        for b in range(blocks_per_scale):
            conv(f"{prefix}.block{b}.conv1")
            conv(f"{prefix}.block{b}.conv2")

    conv("head")
    for s in range(scales):
        blocks(f"enc{s}")
        if s < scales - 1:
            conv(f"down{s}")
    for s in range(scales - 2, -1, -1):
        conv(f"up{s}")
        conv(f"fuse{s}")
        blocks(f"dec{s}")
    conv("tail")
    return names


def write_uabc(
    path: str | Path,
    scales: int,
    widths: tuple[int, ...],
    blocks_per_scale: int,
    tensors: dict[str, np.ndarray],
) -> None:
    """Write named float32 tensors in the UABC layout (little-endian)."""
    names = tensor_names(scales, widths, blocks_per_scale)
    missing = [n for n in names if n not in tensors]
    if missing:
        raise FormatError(f"missing tensors: {missing}")
    parts = [
        UABC_MAGIC,
        struct.pack("<2I", 1, scales),
        struct.pack(f"<{scales}I", *widths),
        struct.pack("<2I", blocks_per_scale, len(names)),
    ]
    for name in names:
        tensor = np.ascontiguousarray(tensors[name], dtype="<f4")
        raw = name.encode("utf-8")
        parts.append(struct.pack("<I", len(raw)))
        parts.append(raw)
        parts.append(struct.pack(f"<{1 + tensor.ndim}I", tensor.ndim, *tensor.shape))
        parts.append(tensor.tobytes())
    Path(path).write_bytes(b"".join(parts))


def read_uabc(path: str | Path):
    """Read a UABC file; returns (scales, widths, blocks_per_scale, tensors)."""
    data = Path(path).read_bytes()
    if data[:4] != UABC_MAGIC:
        raise FormatError(f"{path}: not a UABC file")
    pos = 4
    version, scales = struct.unpack_from("<2I", data, pos)
    pos += 8
    if version != 1:
        raise FormatError(f"{path}: unsupported UABC version {version}")
    widths = struct.unpack_from(f"<{scales}I", data, pos)
    pos += 4 * scales
    blocks_per_scale, tensor_count = struct.unpack_from("<2I", data, pos)
    pos += 8
    tensors: dict[str, np.ndarray] = {}
    for _ in range(tensor_count):
        (name_len,) = struct.unpack_from("<I", data, pos)
        pos += 4
        name = data[pos : pos + name_len].decode("utf-8")
        pos += name_len
        (rank,) = struct.unpack_from("<I", data, pos)
        pos += 4
        dims = struct.unpack_from(f"<{rank}I", data, pos)
        pos += 4 * rank
        count = int(np.prod(dims, dtype=np.int64)) if rank else 1
        tensors[name] = (
            np.frombuffer(data, dtype="<f4", count=count, offset=pos)
            .reshape(dims)
            .copy()
        )
        pos += 4 * count
    if pos != len(data):
        raise FormatError(f"{path}: trailing bytes")
    return scales, tuple(widths), blocks_per_scale, tensors
