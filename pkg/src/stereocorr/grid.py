"""Square block tiling of the template image."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .image_io import GrayImage, as_pixels


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class BlockGrid:
    width: int
    height: int
    block: int
    overlap: int
    margin: int = 0

    def __post_init__(self):
        if self.block < 2:
            raise GridError(f"block must be >= 2, got {self.block}")
        if not 0 <= self.overlap < self.block:
            raise GridError(f"overlap must be in [0, {self.block - 1}], got {self.overlap}")
        if self.margin < 0:
            raise GridError("margin must be non-negative")
        usable = min(self.width, self.height) - 2 * self.margin
        if self.block > usable:
            raise GridError(
                f"block {self.block} does not fit a {self.width}x{self.height} image "
                f"with margin {self.margin}"
            )

    @property
    def stride(self) -> int:
        return self.block - self.overlap

    @property
    def xs(self) -> np.ndarray:
        return np.arange(self.margin, self.width - self.margin - self.block + 1, self.stride)

    @property
    def ys(self) -> np.ndarray:
        return np.arange(self.margin, self.height - self.margin - self.block + 1, self.stride)

    @property
    def n_cols(self) -> int:
        return len(self.xs)

    @property
    def n_rows(self) -> int:
        return len(self.ys)

    def __len__(self) -> int:
        return self.n_cols * self.n_rows

    def origin_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Flattened (x, y) origins in row-major order; index == block id."""
        oy, ox = np.meshgrid(self.ys, self.xs, indexing="ij")
        return ox.ravel(), oy.ravel()

    @property
    def origins(self) -> list[tuple[int, int]]:
        ox, oy = self.origin_arrays()
        return [(int(x), int(y)) for x, y in zip(ox, oy)]


def partition(image_width: int, image_height: int, block: int, overlap: int = 0,
              margin: int = 0) -> BlockGrid:
    return BlockGrid(image_width, image_height, block, overlap, margin)


def _check_fits(px: np.ndarray, origin, block: int) -> tuple[int, int]:
    x, y = origin
    h, w = px.shape
    if block < 1 or x < 0 or y < 0 or x + block > w or y + block > h:
        raise GridError(f"block of size {block} at {origin} leaves the {w}x{h} image")
    return int(x), int(y)


def extract_block(img, origin, block: int) -> GrayImage:
    px = as_pixels(img)
    x, y = _check_fits(px, origin, block)
    return GrayImage(px[y:y + block, x:x + block].copy())


def diagonal_offsets(block: int, which: Literal["main", "anti"] = "main"):
    """(dx, dy) offsets of the diagonal elements relative to a block origin."""
    k = np.arange(block)
    if which == "main":
        return k, k
    if which == "anti":
        return block - 1 - k, k
    raise GridError(f"unknown diagonal {which!r}")


def extract_diagonal(img, origin, block: int, which: Literal["main", "anti"] = "main") -> np.ndarray:
    px = as_pixels(img)
    x, y = _check_fits(px, origin, block)
    dx, dy = diagonal_offsets(block, which)
    return px[y + dy, x + dx].copy()
