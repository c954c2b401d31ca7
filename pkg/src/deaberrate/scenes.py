"""Procedural test scenes: deterministic, edge-rich synthetic images."""

from __future__ import annotations

import numpy as np


def synthetic_scene(height: int, width: int, seed: int = 0) -> np.ndarray:
    """Deterministic piecewise-smooth RGB chart with sharp edges.

    Returns float32 in [0, 1], shape (height, width, 3).  The content mixes
    soft gradients, filled ellipses and polygons, bars of a few pixels and
    a resolution wedge, giving plenty of recoverable edge structure.
    """
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    yn = yy / max(height - 1, 1)
    xn = xx / max(width - 1, 1)

    base = 0.45 + 0.25 * xn + 0.15 * (1.0 - yn)
    img = np.stack([base, 0.92 * base + 0.04, 1.06 * base - 0.04], axis=2)

    # large soft blobs for low-frequency color variation
    for ch in range(3):
        for _ in range(4):
            cy, cx = rng.uniform(0, height), rng.uniform(0, width)
            s = rng.uniform(0.15, 0.35) * min(height, width)
            amp = rng.uniform(-0.2, 0.2)
            img[:, :, ch] += amp * np.exp(
                -((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * s * s)
            )

    # filled ellipses with hard boundaries
    for _ in range(8):
        cy, cx = rng.uniform(0, height), rng.uniform(0, width)
        ay = rng.uniform(0.04, 0.16) * height
        ax = rng.uniform(0.04, 0.16) * width
        tone = rng.uniform(0.08, 0.92, size=3)
        mask = ((yy - cy) / ay) ** 2 + ((xx - cx) / ax) ** 2 <= 1.0
        img[mask] = tone

    # axis-aligned rectangles
    for _ in range(6):
        r0 = int(rng.integers(0, max(1, height - 12)))
        c0 = int(rng.integers(0, max(1, width - 12)))
        r1 = r0 + int(rng.integers(10, max(11, height // 3)))
        c1 = c0 + int(rng.integers(10, max(11, width // 3)))
        tone = rng.uniform(0.08, 0.92, size=3)
        img[r0 : min(r1, height), c0 : min(c1, width)] = tone

    # resolution wedge: bar width shrinks from 8 px down to 2 px
    wedge_h = height // 5
    r0 = height - wedge_h - 2
    col = 2
    for bar_w in (8, 6, 5, 4, 3, 2):
        for _ in range(3):
            if col + bar_w >= width:
                break
            img[r0 : r0 + wedge_h, col : col + bar_w] = 0.05
            col += 2 * bar_w
    # a few isolated bars elsewhere
    for _ in range(5):
        c = int(rng.integers(0, width - 4))
        img[: height // 4, c : c + 3] = rng.uniform(0.0, 1.0)
        r = int(rng.integers(0, height - 4))
        img[r : r + 3, width - width // 4 :] = rng.uniform(0.0, 1.0)

    return np.clip(img, 0.0, 1.0).astype(np.float32)
