"""Shared fixtures data for the test suite: synthetic pairs and datasets."""

from __future__ import annotations

import importlib.util
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from stereocorr.image_io import GrayImage, to_luminance
from stereocorr.synthetic import random_translated_pair

ROOT = Path(__file__).resolve().parents[1]
NATURAL_IMAGES = ("camera", "astronaut", "coins", "moon", "text", "brick", "grass", "gravel",
                  "rocket", "coffee", "chelsea")


@dataclass(frozen=True)
class TranslatedPair:
    name: str
    template: GrayImage
    reference: GrayImage
    dx: int
    dy: int


def natural_image(name: str) -> np.ndarray:
    from skimage import data

    img = getattr(data, name)().astype(np.float64)
    if img.ndim == 3:
        img = to_luminance(img[..., :3])
    return img / 255.0


def translated_pairs(size: int = 256, max_offset: int = 10, seed: int = 2024) -> list[TranslatedPair]:
    """One randomly translated pair per natural image, reproducible from ``seed``."""
    rng = np.random.default_rng(seed)
    pairs = []
    for name in NATURAL_IMAGES:
        t, r, dx, dy = random_translated_pair(natural_image(name), size, max_offset, rng)
        pairs.append(TranslatedPair(name, t, r, dx, dy))
    return pairs


def prepare_motorcycle(out_dir) -> Path:
    """Write the Motorcycle pair via the repository script; returns its directory."""
    spec = importlib.util.spec_from_file_location("prepare_motorcycle",
                                                  ROOT / "scripts" / "prepare_motorcycle.py")
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    return mod.prepare(out_dir)


# pass/fail lines recorded by the acceptance checks, echoed after the run
ACCEPTANCE_LINES: list[str] = []

MIDDLEBURY_FILES = ("view1", "view5", "disp1")


def middlebury_pair(name: str) -> dict[str, Path] | None:
    """Locate ``$STEREO_DATA_ROOT/<name>/{view1,view5,disp1}.{png,pgm}``."""
    root = os.environ.get("STEREO_DATA_ROOT")
    if not root:
        return None
    found = {}
    for stem in MIDDLEBURY_FILES:
        hits = [p for ext in ("png", "pgm", "ppm") if (p := Path(root) / name / f"{stem}.{ext}").exists()]
        if not hits:
            return None
        found[stem] = hits[0]
    return found
