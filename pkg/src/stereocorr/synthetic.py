"""Synthetic stereo pairs with a known integer translation."""

from __future__ import annotations

import numpy as np

from .image_io import GrayImage, as_pixels


def translated_pair(image, dx: int, dy: int, size: int, x0: int, y0: int) -> tuple[GrayImage, GrayImage]:
    """Two ``size``-square crops with ``reference(x + dx, y + dy) == template(x, y)``.

    The template is cut at ``(x0, y0)``; the reference is cut ``(-dx, -dy)``
    away, so both crops must fit inside ``image``.
    """
    px = as_pixels(image)
    h, w = px.shape
    for x, y in ((x0, y0), (x0 - dx, y0 - dy)):
        if x < 0 or y < 0 or x + size > w or y + size > h:
            raise ValueError(f"crop at ({x}, {y}) of size {size} leaves the {w}x{h} image")
    t = px[y0:y0 + size, x0:x0 + size]
    r = px[y0 - dy:y0 - dy + size, x0 - dx:x0 - dx + size]
    return GrayImage(t.copy()), GrayImage(r.copy())


def random_translated_pair(image, size: int, max_offset: int, rng: np.random.Generator):
    """Random offset in ``[-max_offset, max_offset]`` and random placement."""
    px = as_pixels(image)
    size = min(size, min(px.shape) - 2 * max_offset)
    dx, dy = (int(v) for v in rng.integers(-max_offset, max_offset + 1, size=2))
    x0 = int(rng.integers(max_offset, px.shape[1] - size - max_offset + 1))
    y0 = int(rng.integers(max_offset, px.shape[0] - size - max_offset + 1))
    t, r = translated_pair(px, dx, dy, size, x0, y0)
    return t, r, dx, dy
