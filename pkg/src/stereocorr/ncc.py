"""Normalized cross-correlation block matching.

Two variants share one search engine:

* ``full``: zero-mean NCC over every pixel of the block, with the
  reference-side mean and variance taken from sum tables.
* ``diagonal``: NCC over the block's main (or anti) diagonal only, with the
  mean replaced by a causal moving average so the subtraction can run on a
  pixel stream.  Per-shift numerator work drops from ``block**2`` to
  ``block`` products.

Scores for all blocks are computed one shift at a time, visiting shifts in
tie-break priority order so a strict ``>`` keeps the preferred shift.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Literal

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .analog import NoiseSpec, accumulate
from .grid import BlockGrid, diagonal_offsets
from .image_io import as_pixels
from .metrics import DisparityMap, OpCount

# Block or region variance (mean squared deviation) at or below this is
# treated as zero; 8-bit data cannot produce a nonzero value this small.
DEGENERATE_VAR = 1e-12


@dataclass(frozen=True)
class SearchWindow:
    u_min: int
    u_max: int
    v_min: int
    v_max: int

    def __post_init__(self):
        if self.u_min > self.u_max or self.v_min > self.v_max:
            raise ValueError(f"empty search window {self}")

    @classmethod
    def symmetric(cls, max_dx: int, max_dy: int) -> "SearchWindow":
        return cls(-max_dx, max_dx, -max_dy, max_dy)

    @property
    def shape(self) -> tuple[int, int]:
        """(rows, cols) == (number of v values, number of u values)."""
        return self.v_max - self.v_min + 1, self.u_max - self.u_min + 1

    @property
    def size(self) -> int:
        rows, cols = self.shape
        return rows * cols

    def shift_id(self, u: int, v: int) -> int:
        return (v - self.v_min) * self.shape[1] + (u - self.u_min)

    def priority_order(self) -> list[tuple[int, int]]:
        """All shifts, preferred first: smallest |u|+|v|, then by (v, u)."""
        shifts = [(u, v) for v in range(self.v_min, self.v_max + 1)
                  for u in range(self.u_min, self.u_max + 1)]
        return sorted(shifts, key=lambda s: (abs(s[0]) + abs(s[1]), s[1], s[0]))


@dataclass(eq=False)
class ScoreSurface:
    window: SearchWindow
    scores: np.ndarray  # [v - v_min, u - u_min]; NaN where invalid
    valid: np.ndarray

    def at(self, u: int, v: int) -> float:
        return float(self.scores[v - self.window.v_min, u - self.window.u_min])


def best_shift(surface: ScoreSurface, mode: Literal["maximize", "minimize"] = "maximize"):
    """Return ``(u, v, score)`` of the extremal valid score, ties by priority."""
    if mode not in ("maximize", "minimize"):
        raise ValueError(f"unknown mode {mode!r}")
    if not surface.valid.any():
        raise ValueError("score surface has no valid shift")
    w = surface.window
    best = None
    for u, v in w.priority_order():
        iv, iu = v - w.v_min, u - w.u_min
        if not surface.valid[iv, iu]:
            continue
        s = surface.scores[iv, iu]
        if best is None or (s > best[2] if mode == "maximize" else s < best[2]):
            best = (u, v, float(s))
    return best


# --------------------------------------------------------------------------
# sum tables
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SumTables:
    """Integral images of r and r² with a zero first row and column.

    ``running_sum[y, x]`` is the sum over the rectangle ``[0, x) × [0, y)``.
    """

    running_sum: np.ndarray
    running_sum_sq: np.ndarray

    @staticmethod
    def _lookup(table, x, y, w, h):
        return table[y + h, x + w] - table[y, x + w] - table[y + h, x] + table[y, x]

    def rect_sum(self, x, y, w, h):
        return self._lookup(self.running_sum, x, y, w, h)

    def rect_sum_sq(self, x, y, w, h):
        return self._lookup(self.running_sum_sq, x, y, w, h)


def build_sum_tables(reference) -> SumTables:
    r = as_pixels(reference)
    h, w = r.shape
    s = np.zeros((h + 1, w + 1))
    s2 = np.zeros((h + 1, w + 1))
    s[1:, 1:] = r.cumsum(0).cumsum(1)
    s2[1:, 1:] = (r * r).cumsum(0).cumsum(1)
    return SumTables(s, s2)


def moving_average(signal, window_len: int) -> np.ndarray:
    """Causal mean over the last ``window_len`` samples (shorter at the start).

    Works along the last axis, so a batch of streams can be filtered at once.
    """
    x = np.asarray(signal, dtype=np.float64)
    n = x.shape[-1] if x.ndim else 0
    if n == 0:
        raise ValueError("moving_average needs a non-empty signal")
    if not 1 <= window_len <= n:
        raise ValueError(f"window_len must be in [1, {n}], got {window_len}")
    c = np.concatenate([np.zeros(x.shape[:-1] + (1,)), np.cumsum(x, axis=-1)], axis=-1)
    k = np.arange(n)
    lo = np.maximum(0, k - window_len + 1)
    return (c[..., k + 1] - c[..., lo]) / (k + 1 - lo)


# --------------------------------------------------------------------------
# batched scorers: one shift, many blocks
# --------------------------------------------------------------------------

class _Scorer:
    """Scores every block of a batch at one shift; subclasses define the metric."""

    mode = "maximize"

    def __init__(self, reference, ox, oy, block, noise, block_ids):
        self.ref = as_pixels(reference)
        self.ox = np.asarray(ox, dtype=np.int64)
        self.oy = np.asarray(oy, dtype=np.int64)
        self.block = block
        self.noise = noise
        self.block_ids = np.asarray(block_ids, dtype=np.int64)
        h, w = self.ref.shape
        self._x_hi = w - block
        self._y_hi = h - block
        self.usable = np.ones(len(self.ox), dtype=bool)

    def in_bounds(self, idx, u, v):
        x = self.ox[idx] + u
        y = self.oy[idx] + v
        return (x >= 0) & (x <= self._x_hi) & (y >= 0) & (y <= self._y_hi) & self.usable[idx]

    def scores(self, idx, u, v, shift_id, counter: OpCount):
        raise NotImplementedError


class FullNCCScorer(_Scorer):
    def __init__(self, template_blocks, reference, ox, oy, tables=None, noise=None, block_ids=None):
        tb = np.asarray(template_blocks, dtype=np.float64)
        n, b, _ = tb.shape
        super().__init__(reference, ox, oy, b, noise,
                         np.arange(n) if block_ids is None else block_ids)
        self.tables = tables
        self.windows = sliding_window_view(self.ref, (b, b))
        # template statistics are shift-independent: compute once
        self.t_zero = (tb - tb.mean(axis=(1, 2), keepdims=True)).reshape(n, b * b)
        self.t_var = np.einsum("ij,ij->i", self.t_zero, self.t_zero)
        self.usable = self.t_var > DEGENERATE_VAR * b * b

    def scores(self, idx, u, v, shift_id, counter):
        b = self.block
        npx = b * b
        out = np.full(len(idx), np.nan)
        ok = self.in_bounds(idx, u, v)
        sel = idx[ok]
        if sel.size == 0:
            return out, ok
        x = self.ox[sel] + u
        y = self.oy[sel] + v
        r = self.windows[y, x].reshape(len(sel), npx)
        if self.tables is not None:
            s = self.tables.rect_sum(x, y, b, b)
            r_var = self.tables.rect_sum_sq(x, y, b, b) - s * s / npx
            r_zero = r - (s / npx)[:, None]
        else:
            r_zero = r - r.mean(axis=1, keepdims=True)
            r_var = np.einsum("ij,ij->i", r_zero, r_zero)
        products = self.t_zero[sel] * r_zero
        num = accumulate(products, self.noise, self.block_ids[sel], shift_id, runs=b)
        counter.multiplies += sel.size * npx
        counter.adds += sel.size * npx
        live = r_var > DEGENERATE_VAR * npx
        with np.errstate(invalid="ignore", divide="ignore"):
            sc = num / np.sqrt(self.t_var[sel] * r_var)
        ok[np.flatnonzero(ok)[~live]] = False
        out[ok] = sc[live]
        return out, ok


class DiagonalNCCScorer(_Scorer):
    def __init__(self, template_diags, reference, ox, oy, ma_window, which="main",
                 noise=None, block_ids=None):
        td = np.asarray(template_diags, dtype=np.float64)
        n, b = td.shape
        super().__init__(reference, ox, oy, b, noise,
                         np.arange(n) if block_ids is None else block_ids)
        self.ma_window = ma_window
        self.ddx, self.ddy = diagonal_offsets(b, which)
        self.t_tilde = td - moving_average(td, ma_window)
        self.t_energy = np.einsum("ij,ij->i", self.t_tilde, self.t_tilde)
        self.usable = self.t_energy > DEGENERATE_VAR * b

    def scores(self, idx, u, v, shift_id, counter):
        b = self.block
        out = np.full(len(idx), np.nan)
        ok = self.in_bounds(idx, u, v)
        sel = idx[ok]
        if sel.size == 0:
            return out, ok
        r = self.ref[(self.oy[sel] + v)[:, None] + self.ddy, (self.ox[sel] + u)[:, None] + self.ddx]
        r_tilde = r - moving_average(r, self.ma_window)
        r_energy = np.einsum("ij,ij->i", r_tilde, r_tilde)
        products = self.t_tilde[sel] * r_tilde
        num = accumulate(products, self.noise, self.block_ids[sel], shift_id, runs=1)
        counter.multiplies += sel.size * b
        counter.adds += sel.size * b
        live = r_energy > DEGENERATE_VAR * b
        with np.errstate(invalid="ignore", divide="ignore"):
            sc = num / np.sqrt(self.t_energy[sel] * r_energy)
        ok[np.flatnonzero(ok)[~live]] = False
        out[ok] = sc[live]
        return out, ok


def surface_for(scorer: _Scorer, window: SearchWindow, counter: OpCount | None = None) -> ScoreSurface:
    """Full score surface of the scorer's first (only) block."""
    counter = counter if counter is not None else OpCount()
    rows, cols = window.shape
    scores = np.full((rows, cols), np.nan)
    valid = np.zeros((rows, cols), dtype=bool)
    idx = np.array([0])
    for v in range(window.v_min, window.v_max + 1):
        for u in range(window.u_min, window.u_max + 1):
            s, ok = scorer.scores(idx, u, v, window.shift_id(u, v), counter)
            scores[v - window.v_min, u - window.u_min] = s[0]
            valid[v - window.v_min, u - window.u_min] = ok[0]
    return ScoreSurface(window, scores, valid)


def search_blocks(scorer: _Scorer, n_blocks: int, window: SearchWindow, workers: int = 1,
                  counter: OpCount | None = None):
    """Best shift of every block; returns (dx, dy, score, valid) arrays.

    ``workers > 1`` splits the blocks across threads.  Because noise is keyed
    by block id and shift id, the result does not depend on the split.
    """
    order = window.priority_order()
    maximize = scorer.mode == "maximize"

    def run(idx):
        local = OpCount()
        best = np.full(len(idx), -np.inf if maximize else np.inf)
        bu = np.zeros(len(idx), dtype=np.int64)
        bv = np.zeros(len(idx), dtype=np.int64)
        found = np.zeros(len(idx), dtype=bool)
        for u, v in order:
            s, ok = scorer.scores(idx, u, v, window.shift_id(u, v), local)
            better = ok & ((s > best) if maximize else (s < best))
            # a first valid score always wins, even if it equals the sentinel
            better |= ok & ~found
            best[better] = s[better]
            bu[better] = u
            bv[better] = v
            found |= ok
        return bu, bv, best, found, local

    chunks = [c for c in np.array_split(np.arange(n_blocks), max(1, workers)) if c.size]
    if len(chunks) <= 1:
        results = [run(np.arange(n_blocks))]
    else:
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            results = list(pool.map(run, chunks))
    if counter is not None:
        for r in results:
            counter += r[4]
    if not results:
        empty = np.zeros(0)
        return empty.astype(np.int64), empty.astype(np.int64), empty, empty.astype(bool)
    dx = np.concatenate([r[0] for r in results])
    dy = np.concatenate([r[1] for r in results])
    score = np.concatenate([r[2] for r in results])
    valid = np.concatenate([r[3] for r in results])
    return dx, dy, score, valid


# --------------------------------------------------------------------------
# public single-block and whole-image entry points
# --------------------------------------------------------------------------

def ncc_full(template_block, reference, origin, window: SearchWindow, tables: SumTables | None = None,
             *, noise: NoiseSpec | None = None, block_id: int = 0,
             counter: OpCount | None = None) -> ScoreSurface:
    tb = as_pixels(template_block)
    if tb.shape[0] != tb.shape[1]:
        raise ValueError("template block must be square")
    scorer = FullNCCScorer(tb[None], reference, [origin[0]], [origin[1]], tables, noise, [block_id])
    return surface_for(scorer, window, counter)


def ncc_diagonal(template_diag, reference, origin, window: SearchWindow, ma_window: int | None = None,
                 *, which: Literal["main", "anti"] = "main", noise: NoiseSpec | None = None,
                 block_id: int = 0, counter: OpCount | None = None) -> ScoreSurface:
    td = np.asarray(template_diag, dtype=np.float64)
    ma_window = len(td) if ma_window is None else ma_window
    scorer = DiagonalNCCScorer(td[None], reference, [origin[0]], [origin[1]], ma_window, which,
                               noise, [block_id])
    return surface_for(scorer, window, counter)


def template_blocks(template, grid: BlockGrid) -> np.ndarray:
    """All grid blocks of ``template`` as an (n, block, block) array."""
    t = as_pixels(template)
    ox, oy = grid.origin_arrays()
    return sliding_window_view(t, (grid.block, grid.block))[oy, ox]


def template_diagonals(template, grid: BlockGrid, which="main") -> np.ndarray:
    t = as_pixels(template)
    ox, oy = grid.origin_arrays()
    ddx, ddy = diagonal_offsets(grid.block, which)
    return t[oy[:, None] + ddy, ox[:, None] + ddx]


def match_ncc(template, reference, grid: BlockGrid, window: SearchWindow,
              variant: Literal["full", "diagonal"] = "full", ma_window: int | None = None,
              noise: NoiseSpec | None = None, *, which: Literal["main", "anti"] = "main",
              use_tables: bool = True, workers: int = 1,
              counter: OpCount | None = None) -> DisparityMap:
    ox, oy = grid.origin_arrays()
    if variant == "full":
        tables = build_sum_tables(reference) if use_tables else None
        scorer = FullNCCScorer(template_blocks(template, grid), reference, ox, oy, tables, noise)
    elif variant == "diagonal":
        scorer = DiagonalNCCScorer(template_diagonals(template, grid, which), reference, ox, oy,
                                   grid.block if ma_window is None else ma_window, which, noise)
    else:
        raise ValueError(f"unknown NCC variant {variant!r}")
    dx, dy, score, valid = search_blocks(scorer, len(grid), window, workers, counter)
    return DisparityMap.from_blocks(grid, dx, dy, score, valid)
