"""Block size by overlap sweep of SAD matching on a stereo pair.

Thin wrapper over the ``sweep`` subcommand: every block size is run at
every overlap from 0 to block-1, optionally with noise at both SAD stages.
The aggregated table lands in ``<out>/sweep.csv``.
"""

import argparse
from pathlib import Path

from stereocorr.config import load_config
from stereocorr.pipeline import run_sweep


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("config", type=Path, help="base experiment config (data and search window)")
    ap.add_argument("--blocks", default="5, 7, 11, 15")
    ap.add_argument("--noise", type=float, default=0.0, help="noise fraction at both stages")
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--out", type=Path, default=Path("out/overlap_sweep"))
    args = ap.parse_args(argv)

    overrides = {"sweep.block": args.blocks, "sweep.overlap": "0..block-1", "match.variant": "sad",
                 "match.overlap": "0"}
    if args.noise:
        overrides |= {"noise.noise_pct": str(args.noise), "noise.seed": str(args.seed)}
    cfg = load_config(args.config, overrides=overrides)
    path = run_sweep(cfg, args.out)
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
