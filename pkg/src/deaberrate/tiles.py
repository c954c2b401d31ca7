"""Chop an image into non-overlapping padded patches and reassemble it.

Core regions tile the image exactly; each patch additionally carries `pad`
pixels of context on every side, taken from neighboring patches where
available and from edge replication at the image border.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidSpec


def _balanced_edges(total: int, parts: int) -> tuple[int, ...]:
    # Balanced partition, larger cells first (top/left).
    base, rem = divmod(total, parts)
    sizes = [base + 1] * rem + [base] * (parts - rem)
    edges = np.concatenate([[0], np.cumsum(sizes)])
    return tuple(int(e) for e in edges)


@dataclass(frozen=True)
class GridGeometry:
    image_h: int
    image_w: int
    grid_rows: int
    grid_cols: int
    pad: int
    row_edges: tuple[int, ...]
    col_edges: tuple[int, ...]

    def core(self, row: int, col: int) -> tuple[int, int, int, int]:
        """(r0, r1, c0, c1) bounds of the core rectangle of cell (row, col)."""
        return (
            self.row_edges[row],
            self.row_edges[row + 1],
            self.col_edges[col],
            self.col_edges[col + 1],
        )

    def core_shape(self, row: int, col: int) -> tuple[int, int]:
        r0, r1, c0, c1 = self.core(row, col)
        return r1 - r0, c1 - c0

    @property
    def cells(self) -> int:
        return self.grid_rows * self.grid_cols


def plan_grid(
    image_h: int, image_w: int, grid_rows: int, grid_cols: int, pad: int = 0
) -> GridGeometry:
    """Deterministic patch geometry for an image and a PSF grid."""
    if grid_rows < 1 or grid_cols < 1:
        raise InvalidSpec(f"grid must be at least 1x1, got {grid_rows}x{grid_cols}")
    if grid_rows > image_h or grid_cols > image_w:
        raise InvalidSpec(
            f"grid {grid_rows}x{grid_cols} would create empty cells "
            f"on a {image_h}x{image_w} image"
        )
    if pad < 0:
        raise InvalidSpec(f"pad must be >= 0, got {pad}")
    return GridGeometry(
        image_h=image_h,
        image_w=image_w,
        grid_rows=grid_rows,
        grid_cols=grid_cols,
        pad=pad,
        row_edges=_balanced_edges(image_h, grid_rows),
        col_edges=_balanced_edges(image_w, grid_cols),
    )


def _check_image(image: np.ndarray, geometry: GridGeometry) -> None:
    if image.ndim not in (2, 3):
        raise DimensionMismatch(f"expected 2-D or 3-D image, got ndim={image.ndim}")
    if image.shape[0] != geometry.image_h or image.shape[1] != geometry.image_w:
        raise DimensionMismatch(
            f"image {image.shape[:2]} does not match geometry "
            f"({geometry.image_h}, {geometry.image_w})"
        )


def chop(image: np.ndarray, geometry: GridGeometry) -> list[np.ndarray]:
    """Cut the image into padded patches, row-major cell order."""
    image = np.asarray(image)
    _check_image(image, geometry)
    p = geometry.pad
    pad_width = [(p, p), (p, p)] + [(0, 0)] * (image.ndim - 2)
    padded = np.pad(image, pad_width, mode="edge") if p else image
    patches = []
    for r in range(geometry.grid_rows):
        for c in range(geometry.grid_cols):
            r0, r1, c0, c1 = geometry.core(r, c)
            # indices are in padded coordinates (shifted by p), expanded by p
            patches.append(padded[r0 : r1 + 2 * p, c0 : c1 + 2 * p].copy())
    return patches


def shave_assemble(patches: list[np.ndarray], geometry: GridGeometry) -> np.ndarray:
    """Strip each patch's pad margin and write cores back into a full image."""
    if len(patches) != geometry.cells:
        raise DimensionMismatch(
            f"expected {geometry.cells} patches, got {len(patches)}"
        )
    p = geometry.pad
    first = np.asarray(patches[0])
    extra = first.shape[2:]
    out = np.empty((geometry.image_h, geometry.image_w) + extra, dtype=first.dtype)
    for r in range(geometry.grid_rows):
        for c in range(geometry.grid_cols):
            r0, r1, c0, c1 = geometry.core(r, c)
            patch = np.asarray(patches[r * geometry.grid_cols + c])
            want = (r1 - r0 + 2 * p, c1 - c0 + 2 * p) + extra
            if patch.shape != want:
                raise DimensionMismatch(
                    f"patch ({r}, {c}) has shape {patch.shape}, expected {want}"
                )
            core = patch[p : p + (r1 - r0), p : p + (c1 - c0)]
            out[r0:r1, c0:c1] = core
    return out
