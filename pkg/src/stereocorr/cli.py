"""Command-line front end: ``stereocorr match|sweep|power|validate-config``.

Exit codes: 0 success, 1 usage or configuration error, 2 data error
(unreadable images, missing files, incompatible sizes), 3 internal error.
"""

from __future__ import annotations

import argparse
import sys
import traceback

from .analog import power_estimate
from .config import ConfigError, expand_sweep, load_config, parse_config, render_config
from .image_io import ImageIOError
from .pipeline import DataError, run_experiment, run_sweep, write_artifacts

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3

# (flag, config key, help); flags without a value are booleans
_VALUE_FLAGS = (
    ("--root", "data.root", "directory that relative image paths resolve against"),
    ("--template", "data.template", "template (left) image"),
    ("--reference", "data.reference", "reference (right) image"),
    ("--ground-truth", "data.ground_truth", "ground-truth disparity image"),
    ("--truth-scale", "data.truth_scale", "ground-truth pixel value per pixel of disparity"),
    ("--truth-unknown", "data.truth_unknown", "ground-truth code for unknown disparity"),
    ("--truth-sign", "data.truth_sign", "sign relating dx to the ground truth (+1 or -1)"),
    ("--variant", "match.variant", "full_ncc, diagonal_ncc or sad"),
    ("--block", "match.block", "block size in pixels"),
    ("--overlap", "match.overlap", "overlap between neighbouring blocks"),
    ("--margin", "match.margin", "border left out of the block grid"),
    ("--ma-window", "match.ma_window", "moving-average length for diagonal NCC"),
    ("--diagonal", "match.diagonal", "main or anti"),
    ("--sum-tables", "match.sum_tables", "use running-sum tables for full NCC (true/false)"),
    ("--workers", "match.workers", "worker threads"),
    ("--max-dx", "search.max_dx", "symmetric horizontal search radius"),
    ("--max-dy", "search.max_dy", "symmetric vertical search radius"),
    ("--u-min", "search.u_min", None), ("--u-max", "search.u_max", None),
    ("--v-min", "search.v_min", None), ("--v-max", "search.v_max", None),
    ("--multiplier-pct", "noise.multiplier_pct", "multiplier noise, fraction of signal rms"),
    ("--integrator-pct", "noise.integrator_pct", "integrator noise, fraction of signal rms"),
    ("--noise-pct", "noise.noise_pct", "set both noise levels"),
    ("--seed", "noise.seed", "noise seed"),
    ("--rms-source", "noise.rms_source", "template or reference"),
    ("--integrator-per-step", "noise.integrator_per_step",
     "one integrator deviate per accumulated sample (true/false)"),
    ("--output-dir", "output.dir", "where artifacts are written"),
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_config_flags(p, config_required):
    p.add_argument("config", nargs=None if config_required else "?",
                   help="INI configuration file")
    g = p.add_argument_group("overrides")
    for flag, key, help_ in _VALUE_FLAGS:
        g.add_argument(flag, dest=key, metavar="VALUE", help=help_ or argparse.SUPPRESS)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="stereocorr", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    _add_config_flags(sub.add_parser("match", help="match one image pair"), False)
    _add_config_flags(sub.add_parser("sweep", help="run a parameter sweep"), True)
    p = sub.add_parser("power", help="print the analog power estimate")
    p.add_argument("channels", nargs="?", type=int, default=64)
    p = sub.add_parser("validate-config", help="check a config and print it normalized")
    _add_config_flags(p, True)
    p.add_argument("--no-file-check", action="store_true", help="skip image existence checks")
    return parser


def _config(args, check_files=True):
    overrides = {key: getattr(args, key) for _, key, _ in _VALUE_FLAGS
                 if getattr(args, key) is not None}
    if args.config:
        return load_config(args.config, check_files, overrides)
    return parse_config("", None, check_files, overrides)


def cmd_match(args) -> int:
    cfg = _config(args)
    result = run_experiment(cfg)
    write_artifacts(result, cfg.output_dir)
    rms = "n/a" if result.rms_error is None else f"{result.rms_error:.4f}"
    print(f"{len(result.grid)} blocks, corr {result.corr_pre:.4f} -> {result.corr_post:.4f}, "
          f"rms error {rms}, {result.wall_time:.2f} s")
    print(f"artifacts in {cfg.output_dir}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _config(args)
    path = run_sweep(cfg)
    print(f"sweep summary: {path}")
    return EXIT_OK


def cmd_power(args) -> int:
    try:
        report = power_estimate(args.channels)
    except ValueError as exc:
        print(f"stereocorr: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(report.format())
    return EXIT_OK


def cmd_validate_config(args) -> int:
    cfg = _config(args, check_files=not args.no_file_check)
    sys.stdout.write(render_config(cfg))
    print(f"# {len(expand_sweep(cfg))} run(s)")
    return EXIT_OK


_COMMANDS = {"match": cmd_match, "sweep": cmd_sweep, "power": cmd_power,
             "validate-config": cmd_validate_config}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"stereocorr: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ImageIOError, DataError, FileNotFoundError) as exc:
        print(f"stereocorr: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception:  # noqa: BLE001
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
