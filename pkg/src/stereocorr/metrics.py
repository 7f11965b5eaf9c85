"""Disparity maps, alignment compositing, and evaluation metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .grid import BlockGrid
from .image_io import GrayImage, GroundTruthDisparity, as_pixels


@dataclass
class OpCount:
    """Numerator-side arithmetic tallies (mutable so matchers can accumulate)."""

    multiplies: int = 0
    adds: int = 0
    abs_diffs: int = 0

    def __iadd__(self, other: "OpCount") -> "OpCount":
        self.multiplies += other.multiplies
        self.adds += other.adds
        self.abs_diffs += other.abs_diffs
        return self


def op_count(variant: Literal["full_ncc", "diagonal_ncc", "sad"], block: int, shifts: int,
             blocks: int) -> OpCount:
    """Closed-form work per image: blocks × shifts × per-shift cost."""
    if block < 1 or shifts < 0 or blocks < 0:
        raise ValueError("block must be positive; shifts and blocks non-negative")
    n = blocks * shifts
    if variant == "full_ncc":
        return OpCount(multiplies=n * block * block, adds=n * block * block)
    if variant == "diagonal_ncc":
        return OpCount(multiplies=n * block, adds=n * block)
    if variant == "sad":
        return OpCount(abs_diffs=n * block * block, adds=n * block * block)
    raise ValueError(f"unknown variant {variant!r}")


@dataclass(eq=False)
class DisparityMap:
    """One (dx, dy, score) record per block, on a lattice of pitch ``stride``.

    Cell ``(i, j)`` belongs to the block whose origin is
    ``(origin_offset + i * pitch, origin_offset + j * pitch)``; its pixel
    anchor is that block's centre.
    """

    pitch: int
    origin_offset: int
    block: int
    dx: np.ndarray  # (lattice_height, lattice_width) int
    dy: np.ndarray
    score: np.ndarray
    valid: np.ndarray

    @property
    def lattice_width(self) -> int:
        return self.dx.shape[1]

    @property
    def lattice_height(self) -> int:
        return self.dx.shape[0]

    @property
    def anchor(self) -> int:
        return self.origin_offset + self.block // 2

    @classmethod
    def from_blocks(cls, grid: BlockGrid, dx, dy, score, valid) -> "DisparityMap":
        shape = (grid.n_rows, grid.n_cols)
        valid = np.asarray(valid, dtype=bool).reshape(shape)
        return cls(
            pitch=grid.stride,
            origin_offset=grid.margin,
            block=grid.block,
            dx=np.where(valid, np.asarray(dx).reshape(shape), 0).astype(np.int64),
            dy=np.where(valid, np.asarray(dy).reshape(shape), 0).astype(np.int64),
            score=np.where(valid, np.asarray(score, dtype=np.float64).reshape(shape), np.nan),
            valid=valid,
        )

    def same_as(self, other: "DisparityMap") -> bool:
        """Exact equality, scores compared bit-for-bit (NaN == NaN)."""
        return (
            (self.pitch, self.origin_offset, self.block) == (other.pitch, other.origin_offset, other.block)
            and np.array_equal(self.valid, other.valid)
            and np.array_equal(self.dx, other.dx)
            and np.array_equal(self.dy, other.dy)
            and np.array_equal(self.score, other.score, equal_nan=True)
        )

    def pixel_coords(self) -> tuple[np.ndarray, np.ndarray]:
        """Pixel anchors (x, y) of every cell, each shaped like the lattice."""
        xs = self.anchor + self.pitch * np.arange(self.lattice_width)
        ys = self.anchor + self.pitch * np.arange(self.lattice_height)
        return np.meshgrid(xs, ys, indexing="xy")

    def densify(self, width: int, height: int, component: Literal["dx", "dy"] = "dx"):
        """Nearest-lattice fill to pixel resolution; returns (values, valid)."""
        # halfway pixels go to the later cell, so with pitch == block every
        # pixel maps to the block that covers it
        ix = np.clip(np.floor((np.arange(width) - self.anchor) / self.pitch + 0.5),
                     0, self.lattice_width - 1).astype(np.int64)
        iy = np.clip(np.floor((np.arange(height) - self.anchor) / self.pitch + 0.5),
                     0, self.lattice_height - 1).astype(np.int64)
        src = self.dx if component == "dx" else self.dy
        values = src[np.ix_(iy, ix)].astype(np.float64)
        valid = self.valid[np.ix_(iy, ix)]
        return np.where(valid, values, np.nan), valid

    def csv_rows(self):
        px, py = self.pixel_coords()
        for j in range(self.lattice_height):
            for i in range(self.lattice_width):
                yield (i, j, int(px[j, i]), int(py[j, i]), int(self.dx[j, i]), int(self.dy[j, i]),
                       float(self.score[j, i]), bool(self.valid[j, i]))


def apply_disparity(template, dmap: DisparityMap, grid: BlockGrid) -> GrayImage:
    """Move each valid template block by its disparity; last block wins on overlap."""
    t = as_pixels(template)
    h, w = t.shape
    canvas = t.copy()
    ox, oy = grid.origin_arrays()
    valid = dmap.valid.ravel()
    if not valid.any():
        return GrayImage(canvas)
    ids = np.flatnonzero(valid)
    b = grid.block
    oyy, oxx = np.meshgrid(np.arange(b), np.arange(b), indexing="ij")
    sx = ox[ids, None, None] + oxx  # source pixels, (n, b, b)
    sy = oy[ids, None, None] + oyy
    tx = sx + dmap.dx.ravel()[ids, None, None]
    ty = sy + dmap.dy.ravel()[ids, None, None]
    owner = np.broadcast_to(ids[:, None, None], sx.shape)
    inside = (tx >= 0) & (tx < w) & (ty >= 0) & (ty < h)
    sx, sy, tx, ty, owner = sx[inside], sy[inside], tx[inside], ty[inside], owner[inside]
    target = ty * w + tx
    winner = np.full(h * w, -1, dtype=np.int64)
    np.maximum.at(winner, target, owner)
    keep = winner[target] == owner
    canvas.ravel()[target[keep]] = t[sy[keep], sx[keep]]
    return GrayImage(canvas)


def correlation_coefficient(a, b) -> float:
    """Global zero-mean normalized correlation of two equal-sized images.

    Returns 0.0 when exactly one image is constant (the numerator vanishes).
    """
    a, b = as_pixels(a), as_pixels(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    da = a - a.mean()
    db = b - b.mean()
    saa = float(np.sum(da * da))
    sbb = float(np.sum(db * db))
    if saa == 0 and sbb == 0:
        raise ValueError("correlation undefined: both images are constant")
    if saa == 0 or sbb == 0:
        return 0.0
    r = float(np.sum(da * db)) / math.sqrt(saa * sbb)
    return min(1.0, max(-1.0, r))


def rms_disparity_error(dmap: DisparityMap, truth: GroundTruthDisparity, sign: float = 1.0) -> float:
    """RMS of (sign·dx − truth) over pixels valid in both maps.

    ``sign`` maps the matcher's signed horizontal shift onto the truth's
    convention; Middlebury left-view truth with the left view as template
    needs ``sign=-1``.
    """
    dense, valid = dmap.densify(truth.width, truth.height, "dx")
    both = valid & truth.valid
    n = int(both.sum())
    if n == 0:
        raise ValueError("no pixel is valid in both the computed map and the ground truth")
    err = sign * dense[both] - truth.disparity[both]
    return float(np.sqrt(np.mean(err * err)))
