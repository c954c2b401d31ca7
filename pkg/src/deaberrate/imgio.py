"""PNG image I/O: 8/16-bit files, float32 [0, 1] in memory, RGB order.

Bytes are treated as linear intensities; no gamma or ICC handling.
"""

from __future__ import annotations

from pathlib import Path

import cv2
import numpy as np

from .errors import FormatError, InvalidSpec


def read_image(path: str | Path) -> np.ndarray:
    """Load a PNG as float32 in [0, 1]; (H, W) for gray, (H, W, 3) for RGB."""
    raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise FormatError(f"could not read image {path}")
    if raw.dtype == np.uint8:
        scale = 255.0
    elif raw.dtype == np.uint16:
        scale = 65535.0
    else:
        raise FormatError(f"unsupported image dtype {raw.dtype} in {path}")
    img = raw.astype(np.float32) / np.float32(scale)
    if img.ndim == 3:
        if img.shape[2] == 4:
            img = img[:, :, :3]
        img = np.ascontiguousarray(img[:, :, ::-1])  # BGR -> RGB
    return img


def write_image(path: str | Path, image: np.ndarray, bits: int = 8) -> None:
    """Write float [0, 1] data to an 8- or 16-bit PNG."""
    if bits == 8:
        scale, dtype = 255.0, np.uint8
    elif bits == 16:
        scale, dtype = 65535.0, np.uint16
    else:
        raise InvalidSpec(f"bits must be 8 or 16, got {bits}")
    img = np.clip(np.asarray(image, dtype=np.float64), 0.0, 1.0)
    quantized = np.rint(img * scale).astype(dtype)
    if quantized.ndim == 3:
        quantized = np.ascontiguousarray(quantized[:, :, ::-1])  # RGB -> BGR
    if not cv2.imwrite(str(path), quantized):
        raise FormatError(f"could not write image {path}")
