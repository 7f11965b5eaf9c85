"""Sum-of-absolute-differences matching with overlapping blocks.

With ``overlap == block - 1`` every pixel position gets its own block and the
result is a per-pixel disparity map; smaller overlaps trade resolution for a
``stride**2`` reduction in work.
"""

from __future__ import annotations

import numba
import numpy as np

from .analog import NoiseSpec, Stage, _base_key, _fill_normals
from .grid import BlockGrid
from .image_io import as_pixels
from .metrics import DisparityMap, OpCount
from .ncc import ScoreSurface, SearchWindow, _Scorer, search_blocks, surface_for, template_blocks


def sad_block(reference_block, template_block) -> float:
    r = as_pixels(reference_block)
    t = as_pixels(template_block)
    if r.shape != t.shape:
        raise ValueError(f"block shape mismatch {r.shape} vs {t.shape}")
    return float(np.abs(r - t).sum())


@numba.njit(cache=True, nogil=True)
def _sad_kernel(ref, t, ox, oy, usable, block_ids, idx, u, v, shift_id,
                seed, sig_m, sig_i, n_int, out, ok):
    """SAD of each selected block at shift (u, v), with in-stream noise.

    Abs-value noise is added to every |R - T| sample before integration;
    ``n_int`` integrator deviates are added to the accumulated total.
    """
    npx = t.shape[1]
    b = int(round(np.sqrt(npx)))
    y_hi = ref.shape[0] - b
    x_hi = ref.shape[1] - b
    g_m = np.zeros(npx)
    g_i = np.zeros(max(n_int, 1))
    for j in range(idx.shape[0]):
        i = idx[j]
        x = ox[i] + u
        y = oy[i] + v
        if not usable[i] or x < 0 or x > x_hi or y < 0 or y > y_hi:
            ok[j] = False
            out[j] = np.nan
            continue
        ok[j] = True
        if sig_m > 0:
            _fill_normals(_base_key(seed, 0, block_ids[i], shift_id), g_m)
        total = 0.0
        for row in range(b):
            for col in range(b):
                k = row * b + col
                val = abs(ref[y + row, x + col] - t[i, k])
                if sig_m > 0:
                    val += sig_m * g_m[k]
                total += val
        if sig_i > 0 and n_int > 0:
            _fill_normals(_base_key(seed, 1, block_ids[i], shift_id), g_i[:n_int])
            for k in range(n_int):
                total += sig_i * g_i[k]
        out[j] = total


class SADScorer(_Scorer):
    mode = "minimize"

    def __init__(self, template_blocks, reference, ox, oy, noise=None, block_ids=None):
        tb = np.asarray(template_blocks, dtype=np.float64)
        n, b, _ = tb.shape
        super().__init__(reference, ox, oy, b, noise,
                         np.arange(n) if block_ids is None else block_ids)
        self.t = np.ascontiguousarray(tb.reshape(n, b * b))
        self.ref = np.ascontiguousarray(self.ref)
        if noise is None:
            self._noise_args = (np.uint64(0), 0.0, 0.0, 0)
        else:
            # rows are integrated one at a time, then summed downstream
            n_int = b * b if noise.integrator_per_step else b
            self._noise_args = (np.uint64(noise.seed), noise.sigma(Stage.MULTIPLIER),
                                noise.sigma(Stage.INTEGRATOR), n_int)

    def scores(self, idx, u, v, shift_id, counter):
        idx = np.ascontiguousarray(idx, dtype=np.int64)
        out = np.empty(len(idx))
        ok = np.empty(len(idx), dtype=bool)
        _sad_kernel(self.ref, self.t, self.ox, self.oy, self.usable, self.block_ids, idx,
                    u, v, shift_id, *self._noise_args, out, ok)
        n_ok = int(ok.sum())
        counter.abs_diffs += n_ok * self.t.shape[1]
        counter.adds += n_ok * self.t.shape[1]
        return out, ok


def sad_search(template_block, reference, origin, window: SearchWindow,
               noise: NoiseSpec | None = None, *, block_id: int = 0,
               counter: OpCount | None = None) -> ScoreSurface:
    tb = as_pixels(template_block)
    if tb.shape[0] != tb.shape[1]:
        raise ValueError("template block must be square")
    scorer = SADScorer(tb[None], reference, [origin[0]], [origin[1]], noise, [block_id])
    return surface_for(scorer, window, counter)


def match_sad(template, reference, grid: BlockGrid, window: SearchWindow,
              noise: NoiseSpec | None = None, *, workers: int = 1,
              counter: OpCount | None = None) -> DisparityMap:
    ox, oy = grid.origin_arrays()
    scorer = SADScorer(template_blocks(template, grid), reference, ox, oy, noise)
    dx, dy, score, valid = search_blocks(scorer, len(grid), window, workers, counter)
    return DisparityMap.from_blocks(grid, dx, dy, score, valid)
