"""Write the Motorcycle stereo pair shipped with scikit-image as PGM files.

Produces ``left.pgm``, ``right.pgm`` (8-bit luminance) and ``disp.pgm``, a
16-bit ground truth with 256 counts per pixel of disparity and 0 = unknown.
"""

import argparse
from pathlib import Path

import numpy as np
from skimage import data

from stereocorr.image_io import save_raw_gray, to_luminance

TRUTH_SCALE = 256


def prepare(out_dir) -> Path:
    out = Path(out_dir) / "Motorcycle"
    out.mkdir(parents=True, exist_ok=True)
    left, right, disp = data.stereo_motorcycle()
    for name, rgb in (("left.pgm", left), ("right.pgm", right)):
        gray = np.clip(np.rint(to_luminance(rgb.astype(np.float64))), 0, 255).astype(np.uint16)
        save_raw_gray(out / name, gray, 255)
    known = np.isfinite(disp)
    codes = np.where(known, np.rint(np.where(known, disp, 0) * TRUTH_SCALE), 0)
    save_raw_gray(out / "disp.pgm", np.clip(codes, 0, 65535).astype(np.uint16), 65535)
    return out


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out_dir", nargs="?", default="data")
    print(f"wrote {prepare(ap.parse_args().out_dir)}")
