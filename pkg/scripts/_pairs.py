"""Natural-image translated pairs shared by the experiment scripts."""

import numpy as np
from skimage import data

from stereocorr.image_io import GrayImage, to_luminance
from stereocorr.synthetic import random_translated_pair

IMAGES = ("camera", "astronaut", "coins", "moon", "text", "brick", "grass", "gravel",
          "rocket", "coffee", "chelsea")


def load(name):
    img = getattr(data, name)().astype(np.float64)
    if img.ndim == 3:
        img = to_luminance(img[..., :3])
    return GrayImage(img / 255.0)


def pairs(size=256, max_offset=10, seed=2024, names=IMAGES):
    rng = np.random.default_rng(seed)
    for name in names:
        t, r, dx, dy = random_translated_pair(load(name), size, max_offset, rng)
        yield name, t, r, dx, dy
