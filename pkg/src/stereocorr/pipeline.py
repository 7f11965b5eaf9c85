"""Run one configured experiment and write its artifacts."""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analog import NoiseSpec, image_rms
from .config import ExperimentConfig, SweepRun, expand_sweep
from .grid import BlockGrid, partition
from .image_io import GrayImage, load_gray, load_ground_truth, save_gray, save_rgb
from .metrics import (DisparityMap, OpCount, apply_disparity, correlation_coefficient,
                      rms_disparity_error)
from .ncc import match_ncc
from .sad import match_sad

CSV_HEADER = ("cell_x", "cell_y", "px_x", "px_y", "dx", "dy", "score", "valid")


class DataError(Exception):
    """Inputs load but cannot be used together (size mismatch, no overlap...)."""


@dataclass
class RunResult:
    config: ExperimentConfig
    grid: BlockGrid
    dmap: DisparityMap
    ops: OpCount
    corr_pre: float
    corr_post: float
    rms_error: float | None
    wall_time: float
    noise: NoiseSpec | None = None
    artifacts: dict[str, str] = field(default_factory=dict)


def build_noise(cfg: ExperimentConfig, template: GrayImage, reference: GrayImage) -> NoiseSpec | None:
    if cfg.noise is None:
        return None
    n = cfg.noise
    source = template if n.rms_source == "template" else reference
    return NoiseSpec(n.multiplier_pct, n.integrator_pct, n.seed, image_rms(source),
                     n.integrator_per_step)


def run_match(cfg: ExperimentConfig, template: GrayImage, reference: GrayImage,
              truth=None, workers: int | None = None) -> RunResult:
    if (template.width, template.height) != (reference.width, reference.height):
        raise DataError(f"template is {template.width}x{template.height} but reference is "
                        f"{reference.width}x{reference.height}")
    try:
        grid = partition(template.width, template.height, cfg.block, cfg.overlap, cfg.margin)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    noise = build_noise(cfg, template, reference)
    workers = cfg.workers if workers is None else workers
    ops = OpCount()
    start = time.perf_counter()
    if cfg.variant == "sad":
        dmap = match_sad(template, reference, grid, cfg.search, noise, workers=workers, counter=ops)
    else:
        dmap = match_ncc(template, reference, grid, cfg.search,
                         "full" if cfg.variant == "full_ncc" else "diagonal",
                         cfg.effective_ma_window, noise, which=cfg.diagonal,
                         use_tables=cfg.sum_tables, workers=workers, counter=ops)
    wall = time.perf_counter() - start
    aligned = apply_disparity(template, dmap, grid)
    rms = None
    if truth is not None:
        if (truth.width, truth.height) != (template.width, template.height):
            raise DataError("ground truth size differs from the template")
        rms = rms_disparity_error(dmap, truth, cfg.truth_sign)
    result = RunResult(cfg, grid, dmap, ops, correlation_coefficient(template, reference),
                       correlation_coefficient(aligned, reference), rms, wall, noise)
    result.aligned = aligned
    return result


def load_inputs(cfg: ExperimentConfig):
    template = load_gray(cfg.template_path)
    reference = load_gray(cfg.reference_path)
    truth = None
    if cfg.ground_truth_path is not None:
        truth = load_ground_truth(cfg.ground_truth_path, cfg.truth_scale, cfg.truth_unknown)
    return template, reference, truth


def run_experiment(cfg: ExperimentConfig, workers: int | None = None) -> RunResult:
    template, reference, truth = load_inputs(cfg)
    result = run_match(cfg, template, reference, truth, workers)
    result.template, result.reference = template, reference
    return result


# --------------------------------------------------------------------------
# artifacts
# --------------------------------------------------------------------------

def _num(x) -> str:
    if x is None:
        return "n/a"
    if isinstance(x, float):
        return "nan" if math.isnan(x) else repr(x)
    return str(x)


def disparity_csv(dmap: DisparityMap) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for cx, cy, px, py, dx, dy, score, valid in dmap.csv_rows():
        w.writerow((cx, cy, px, py, dx, dy, _num(score), int(valid)))
    return buf.getvalue()


def _visualize(values: np.ndarray, valid: np.ndarray):
    """Linear 0..1 scaling over the observed range of valid values."""
    if not valid.any():
        return np.zeros(values.shape), 0.0, 0.0
    lo, hi = float(values[valid].min()), float(values[valid].max())
    span = hi - lo
    scaled = np.zeros(values.shape)
    if span > 0:
        scaled[valid] = (values[valid] - lo) / span
    return scaled, lo, hi


def overlay(a, b) -> np.ndarray:
    """Magenta/green overlap composite: a in red+blue, b in green."""
    return np.stack([a, b, a], axis=-1)


def report_items(result: RunResult) -> list[tuple[str, str]]:
    cfg, dmap = result.config, result.dmap
    w = cfg.search
    valid = dmap.valid
    items = [
        ("variant", cfg.variant),
        ("block", cfg.block),
        ("overlap", cfg.overlap),
        ("stride", result.grid.stride),
        ("margin", cfg.margin),
        ("ma_window", cfg.effective_ma_window if cfg.variant == "diagonal_ncc" else "n/a"),
        ("search_u_min", w.u_min), ("search_u_max", w.u_max),
        ("search_v_min", w.v_min), ("search_v_max", w.v_max),
        ("shifts", w.size),
        ("blocks", len(result.grid)),
        ("valid_blocks", int(valid.sum())),
        ("noise_multiplier_pct", result.noise.multiplier_pct if result.noise else 0.0),
        ("noise_integrator_pct", result.noise.integrator_pct if result.noise else 0.0),
        ("noise_integrator_per_step", int(result.noise.integrator_per_step) if result.noise else 0),
        ("noise_seed", result.noise.seed if result.noise else "n/a"),
        ("noise_signal_rms", result.noise.signal_rms if result.noise else "n/a"),
        ("corr_pre", result.corr_pre),
        ("corr_post", result.corr_post),
        ("rms_disparity_error", result.rms_error),
        ("truth_sign", cfg.truth_sign if result.rms_error is not None else "n/a"),
        ("op_multiplies", result.ops.multiplies),
        ("op_adds", result.ops.adds),
        ("op_abs_diffs", result.ops.abs_diffs),
        ("dx_min", int(dmap.dx[valid].min()) if valid.any() else "n/a"),
        ("dx_max", int(dmap.dx[valid].max()) if valid.any() else "n/a"),
        ("dy_min", int(dmap.dy[valid].min()) if valid.any() else "n/a"),
        ("dy_max", int(dmap.dy[valid].max()) if valid.any() else "n/a"),
    ]
    items += [(f"artifact_{k}", v) for k, v in result.artifacts.items()]
    return [(k, _num(v)) for k, v in items]


def write_artifacts(result: RunResult, out_dir) -> dict[str, str]:
    """Write every artifact under ``out_dir``; paths are recorded relative to it.

    Everything except ``timing.log`` depends only on the inputs, so repeated
    runs produce byte-identical files.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dmap, t = result.dmap, result.template
    names = {
        "disparity_csv": "disparity.csv",
        "disparity_x": "disparity_x.pgm",
        "disparity_y": "disparity_y.pgm",
        "disparity_scale": "disparity_scale.txt",
        "aligned": "aligned.pgm",
        "overlap_before": "overlap_before.ppm",
        "overlap_after": "overlap_after.ppm",
        "report_text": "report.txt",
        "report_kv": "report.kv",
        "timing_log": "timing.log",
    }
    result.artifacts = dict(names)

    (out / names["disparity_csv"]).write_text(disparity_csv(dmap))
    scale_lines = ["# component min max  (gray 0 -> min, 255 -> max; invalid cells are 0)"]
    for comp in ("dx", "dy"):
        values, valid = dmap.densify(t.width, t.height, comp)
        img, lo, hi = _visualize(values, valid)
        save_gray(out / names[f"disparity_{comp[1]}"], img, maxval=255)
        scale_lines.append(f"{comp} {lo!r} {hi!r}")
    (out / names["disparity_scale"]).write_text("\n".join(scale_lines) + "\n")
    save_gray(out / names["aligned"], result.aligned, maxval=255)
    save_rgb(out / names["overlap_before"], overlay(t.pixels, result.reference.pixels))
    save_rgb(out / names["overlap_after"], overlay(result.aligned.pixels, result.reference.pixels))

    items = report_items(result)
    (out / names["report_kv"]).write_text("".join(f"{k}={v}\n" for k, v in items))
    width = max(len(k) for k, _ in items)
    text = ["stereo match report", ""] + [f"{k:<{width}}  {v}" for k, v in items]
    (out / names["report_text"]).write_text("\n".join(text) + "\n")
    (out / names["timing_log"]).write_text(
        f"wall_time_s={result.wall_time!r}\nfinished_at={time.strftime('%Y-%m-%dT%H:%M:%S')}\n")
    return result.artifacts


def parse_report(path) -> dict[str, str]:
    pairs = (line.split("=", 1) for line in Path(path).read_text().splitlines() if "=" in line)
    return {k: v for k, v in pairs}


# --------------------------------------------------------------------------
# sweeps
# --------------------------------------------------------------------------

SWEEP_HEADER = ("run", "variant", "block", "overlap", "stride", "multiplier_pct", "integrator_pct",
                "corr_pre", "corr_post", "rms_disparity_error", "op_multiplies", "op_adds",
                "op_abs_diffs", "status", "error")


def run_sweep(cfg: ExperimentConfig, out_dir=None, log=print) -> Path:
    """Run every sweep point; a failing run is recorded and the sweep goes on."""
    out = Path(out_dir or cfg.output_dir)
    runs = expand_sweep(cfg)
    out.mkdir(parents=True, exist_ok=True)
    (out / "manifest.txt").write_text("".join(f"{r.label}\n" for r in runs))
    template, reference, truth = load_inputs(cfg)
    rows, timing = [], []
    flat = cfg.sweep.empty  # a sweep without axes is a single match run
    for run in runs:
        run_dir = out if flat else out / run.label
        rows.append(_sweep_row(run, template, reference, truth, run_dir, timing, log))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    w.writerows(rows)
    (out / "sweep_timing.log").write_text("".join(timing))
    path = out / "sweep.csv"
    path.write_text(buf.getvalue())
    return path


def _sweep_row(run: SweepRun, template, reference, truth, run_dir: Path, timing, log):
    c = run.config
    noise = c.noise
    head = [run.label, c.variant, c.block, c.overlap, c.block - c.overlap,
            _num(noise.multiplier_pct if noise else 0.0), _num(noise.integrator_pct if noise else 0.0)]
    try:
        result = run_match(c, template, reference, truth)
        result.template, result.reference = template, reference
        write_artifacts(result, run_dir)
    except Exception as exc:  # noqa: BLE001 - recorded in the row, sweep continues
        log(f"{run.label}: FAILED {exc}")
        return head + ["", "", "", "", "", "", "failed", f"{type(exc).__name__}: {exc}"]
    timing.append(f"{run.label} wall_time_s={result.wall_time!r}\n")
    log(f"{run.label}: corr_post={result.corr_post:.4f} rms={_num(result.rms_error)}")
    return head + [_num(result.corr_pre), _num(result.corr_post), _num(result.rms_error),
                   result.ops.multiplies, result.ops.adds, result.ops.abs_diffs, "ok", ""]
