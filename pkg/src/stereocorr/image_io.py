"""Graymap/pixmap reading and writing, plus Middlebury-style ground truth.

Everything is normalized into :class:`GrayImage`, a 2-D float64 array with
values in ``[0, 1]``.  Portable any-maps (P2, P3, P5, P6) are parsed
directly; PNG and other compressed rasters go through Pillow.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

LUMA_WEIGHTS = (0.299, 0.587, 0.114)


class ImageIOError(Exception):
    """Base class for image loading failures."""


class UnreadableImageError(ImageIOError):
    """The file is missing or cannot be read."""


class UnsupportedFormatError(ImageIOError):
    """The file is readable but not in a format we understand."""


class HeaderPayloadMismatchError(ImageIOError):
    """The header promises more (or fewer) samples than the payload holds."""


@dataclass(frozen=True, eq=False)
class GrayImage:
    """Normalized grayscale image.

    ``pixels`` is indexed ``[y, x]``.  ``maxval`` remembers the source
    container's sample range so that a load/save cycle is bit-exact.
    """

    pixels: np.ndarray
    maxval: int | None = None

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float64)
        if px.ndim != 2 or px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError(f"GrayImage needs a non-empty 2-D array, got shape {px.shape}")
        if not np.all(np.isfinite(px)) or px.min() < 0.0 or px.max() > 1.0:
            raise ValueError("GrayImage intensities must lie in [0, 1]")
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def data(self) -> np.ndarray:
        """Row-major flat view of the intensities."""
        return self.pixels.ravel()

    def __getitem__(self, xy):
        x, y = xy
        return float(self.pixels[y, x])


@dataclass(frozen=True, eq=False)
class GroundTruthDisparity:
    disparity: np.ndarray  # [y, x], NaN where invalid
    valid: np.ndarray

    @property
    def width(self) -> int:
        return self.disparity.shape[1]

    @property
    def height(self) -> int:
        return self.disparity.shape[0]


def as_pixels(img) -> np.ndarray:
    """Accept a GrayImage or any 2-D array-like and return a float64 array."""
    if isinstance(img, GrayImage):
        return img.pixels
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D image, got shape {arr.shape}")
    return arr


# --------------------------------------------------------------------------
# Portable any-map parsing
# --------------------------------------------------------------------------

_PNM_CHANNELS = {b"P2": 1, b"P5": 1, b"P3": 3, b"P6": 3}
_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _parse_pnm(raw: bytes, path) -> tuple[np.ndarray, int]:
    magic = raw[:2]
    channels = _PNM_CHANNELS[magic]
    pos = 2
    header = []
    for _ in range(3):
        m = _TOKEN.match(raw, pos)
        if m is None:
            raise HeaderPayloadMismatchError(f"{path}: truncated header")
        header.append(m.group(1))
        pos = m.end()
    try:
        width, height, maxval = (int(t) for t in header)
    except ValueError:
        raise UnsupportedFormatError(f"{path}: non-numeric header field") from None
    if width < 1 or height < 1 or not 0 < maxval <= 65535:
        raise UnsupportedFormatError(f"{path}: bad header {width}x{height} maxval {maxval}")
    count = width * height * channels

    if magic in (b"P2", b"P3"):
        tokens = re.sub(rb"#[^\n]*", b"", raw[pos:]).split()
        if len(tokens) != count:
            raise HeaderPayloadMismatchError(
                f"{path}: header says {count} samples, payload has {len(tokens)}"
            )
        samples = np.array([int(t) for t in tokens], dtype=np.int64)
    else:
        # exactly one whitespace byte separates maxval from the binary raster
        payload = raw[pos + 1:]
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        expected = count * dtype.itemsize
        if len(payload) != expected:
            raise HeaderPayloadMismatchError(
                f"{path}: header implies {expected} payload bytes, found {len(payload)}"
            )
        samples = np.frombuffer(payload, dtype=dtype).astype(np.int64)
    if samples.size and (samples.min() < 0 or samples.max() > maxval):
        raise HeaderPayloadMismatchError(f"{path}: sample outside [0, {maxval}]")
    shape = (height, width) if channels == 1 else (height, width, 3)
    return samples.reshape(shape), maxval


def _read_with_pillow(path) -> tuple[np.ndarray, int]:
    from PIL import Image, UnidentifiedImageError

    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode in ("1", "L", "P", "RGB", "RGBA", "LA"):
                if mode == "P":
                    im = im.convert("RGB")
                elif mode == "LA":
                    im = im.convert("L")
                elif mode == "RGBA":
                    im = im.convert("RGB")
                elif mode == "1":
                    im = im.convert("L")
                return np.asarray(im).astype(np.int64), 255
            if mode in ("I;16", "I;16B", "I;16L", "I"):
                arr = np.asarray(im).astype(np.int64)
                return arr, 65535
    except UnidentifiedImageError:
        raise UnsupportedFormatError(f"{path}: unrecognized image format") from None
    except OSError as exc:
        raise UnsupportedFormatError(f"{path}: {exc}") from None
    raise UnsupportedFormatError(f"{path}: unsupported image mode {mode!r}")


def read_raw(path) -> tuple[np.ndarray, int]:
    """Return the raw integer samples (H×W or H×W×3) and the container maxval."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise UnreadableImageError(f"{path}: {exc.strerror or exc}") from None
    if raw[:2] in _PNM_CHANNELS:
        return _parse_pnm(raw, path)
    return _read_with_pillow(path)


def to_luminance(rgb: np.ndarray) -> np.ndarray:
    r, g, b = LUMA_WEIGHTS
    rgb = rgb.astype(np.float64)
    return r * rgb[..., 0] + g * rgb[..., 1] + b * rgb[..., 2]


def load_gray(path) -> GrayImage:
    samples, maxval = read_raw(path)
    if samples.ndim == 3:
        # luminance of in-range samples never exceeds maxval, but float rounding can
        px = np.clip(to_luminance(samples) / maxval, 0.0, 1.0)
        return GrayImage(px)
    return GrayImage(samples / maxval, maxval=maxval)


def load_ground_truth(path, scale: float = 3.0, unknown_code: int = 0) -> GroundTruthDisparity:
    """Load a disparity map stored as ``raw = disparity * scale``."""
    if not scale > 0:
        raise ValueError("scale must be positive")
    samples, _ = read_raw(path)
    if samples.ndim == 3:
        raise UnsupportedFormatError(f"{path}: ground truth must be single-channel")
    valid = samples != unknown_code
    disparity = np.where(valid, samples / scale, np.nan)
    return GroundTruthDisparity(disparity=disparity, valid=valid)


# --------------------------------------------------------------------------
# Writing
# --------------------------------------------------------------------------

def _quantize(px: np.ndarray, maxval: int) -> np.ndarray:
    return np.rint(np.clip(px, 0.0, 1.0) * maxval).astype(np.int64)


def _pnm_bytes(magic: str, samples: np.ndarray, width: int, height: int, maxval: int) -> bytes:
    head = f"{magic}\n{width} {height}\n{maxval}\n".encode("ascii")
    if magic in ("P2", "P3"):
        per_row = width * (3 if magic == "P3" else 1)
        rows = samples.reshape(height, per_row)
        body = "\n".join(" ".join(str(int(v)) for v in row) for row in rows) + "\n"
        return head + body.encode("ascii")
    dtype = ">u2" if maxval > 255 else "u1"
    return head + samples.astype(dtype).tobytes()


def save_gray(path, img, maxval: int | None = None, ascii: bool = False) -> None:
    """Write a P5 (or P2 with ``ascii=True``) graymap."""
    if maxval is None:
        maxval = img.maxval if isinstance(img, GrayImage) and img.maxval else 255
    if not 0 < maxval <= 65535:
        raise ValueError("maxval must be in 1..65535")
    px = as_pixels(img)
    h, w = px.shape
    data = _pnm_bytes("P2" if ascii else "P5", _quantize(px, maxval), w, h, maxval)
    Path(path).write_bytes(data)


def save_raw_gray(path, samples: np.ndarray, maxval: int) -> None:
    """Write integer samples verbatim as a binary graymap (used for ground truth)."""
    samples = np.asarray(samples, dtype=np.int64)
    if samples.min() < 0 or samples.max() > maxval:
        raise ValueError("samples exceed maxval")
    h, w = samples.shape
    Path(path).write_bytes(_pnm_bytes("P5", samples, w, h, maxval))


def save_rgb(path, rgb: np.ndarray, maxval: int = 255) -> None:
    """Write an H×W×3 float array in [0, 1] as a binary pixmap (P6)."""
    rgb = np.asarray(rgb, dtype=np.float64)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError("expected an H×W×3 array")
    h, w, _ = rgb.shape
    Path(path).write_bytes(_pnm_bytes("P6", _quantize(rgb, maxval), w, h, maxval))
