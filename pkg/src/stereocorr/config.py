"""Experiment configuration: an INI-style ``key = value`` document.

Sections and keys (everything except ``[data] template`` and ``reference``
is optional)::

    [data]      root, template, reference, ground_truth,
                truth_scale, truth_unknown, truth_sign
    [match]     variant, block, overlap, margin, ma_window, diagonal,
                sum_tables, workers
    [search]    max_dx, max_dy, u_min, u_max, v_min, v_max
    [noise]     multiplier_pct, integrator_pct, noise_pct, seed,
                rms_source, integrator_per_step
    [sweep]     block, overlap, multiplier_pct, integrator_pct, noise_pct
    [output]    dir

Unknown sections or keys are errors.  Relative data paths resolve against
``[data] root``, which the ``STEREO_DATA_ROOT`` environment variable
overrides.  See ``configs/example.ini`` for a commented example.
"""

from __future__ import annotations

import configparser
import itertools
import os
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

from .ncc import SearchWindow

DATA_ROOT_ENV = "STEREO_DATA_ROOT"
VARIANTS = ("full_ncc", "diagonal_ncc", "sad")
RECOMMENDED_OVERLAP = 0.65


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


def default_overlap(block: int) -> int:
    return min(block - 1, int(RECOMMENDED_OVERLAP * block + 0.5))


@dataclass(frozen=True)
class NoiseConfig:
    multiplier_pct: float = 0.0
    integrator_pct: float = 0.0
    seed: int = 0
    rms_source: str = "template"
    integrator_per_step: bool = True

    @property
    def silent(self) -> bool:
        return self.multiplier_pct == 0 and self.integrator_pct == 0


@dataclass(frozen=True)
class SweepConfig:
    blocks: tuple[int, ...] = ()
    overlaps: tuple[int, ...] | str = ()  # ints, or "lo..hi" where hi may use `block`
    multiplier_pcts: tuple[float, ...] = ()
    integrator_pcts: tuple[float, ...] = ()
    noise_pcts: tuple[float, ...] = ()

    @property
    def empty(self) -> bool:
        return not (self.blocks or self.overlaps or self.multiplier_pcts
                    or self.integrator_pcts or self.noise_pcts)


@dataclass(frozen=True)
class ExperimentConfig:
    template_path: Path
    reference_path: Path
    ground_truth_path: Path | None = None
    data_root: Path | None = None
    truth_scale: float = 3.0
    truth_unknown: int = 0
    truth_sign: int = -1
    variant: str = "sad"
    block: int = 15
    overlap: int = default_overlap(15)
    margin: int = 0
    ma_window: int | None = None  # None: follow the block size
    diagonal: str = "main"
    sum_tables: bool = True
    workers: int = 1
    search: SearchWindow = field(default_factory=lambda: SearchWindow.symmetric(16, 2))
    noise: NoiseConfig | None = None
    sweep: SweepConfig = field(default_factory=SweepConfig)
    output_dir: Path = Path("out")

    @property
    def effective_ma_window(self) -> int:
        return self.block if self.ma_window is None else self.ma_window


# --------------------------------------------------------------------------
# field coercion
# --------------------------------------------------------------------------

def _int(key, raw):
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(key, f"expected an integer, got {raw!r}") from None


def _float(key, raw):
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(key, f"expected a number, got {raw!r}") from None


def _bool(key, raw):
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(key, f"expected a boolean, got {raw!r}")


def _choice(key, raw, options):
    if raw not in options:
        raise ConfigError(key, f"must be one of {', '.join(options)}; got {raw!r}")
    return raw


def _list(key, raw, conv):
    items = [s.strip() for s in raw.split(",") if s.strip()]
    if not items:
        raise ConfigError(key, "empty list")
    return tuple(conv(key, s) for s in items)


_RANGE = re.compile(r"^\s*(-?\d+)\s*\.\.\s*(block\s*[-−]\s*(\d+)|block|-?\d+)\s*$")


def overlaps_for(spec: tuple[int, ...] | str, block: int) -> list[int]:
    """Expand an overlap axis for one block size."""
    if isinstance(spec, tuple):
        return list(spec)
    m = _RANGE.match(spec)
    lo = int(m.group(1))
    if m.group(3) is not None:
        hi = block - int(m.group(3))
    elif m.group(2) == "block":
        hi = block
    else:
        hi = int(m.group(2))
    return list(range(lo, hi + 1))


def _overlap_axis(key, raw):
    if ".." in raw:
        m = _RANGE.match(raw)
        if m is None:
            raise ConfigError(key, f"bad range {raw!r}; use e.g. 0..block-1 or 0..4")
        lo, hi = m.group(1), m.group(2).replace(" ", "").replace("−", "-")
        return f"{int(lo)}..{hi}"
    return _list(key, raw, _int)


# --------------------------------------------------------------------------
# parsing
# --------------------------------------------------------------------------

_SCHEMA = {
    "data": {"root", "template", "reference", "ground_truth", "truth_scale", "truth_unknown",
             "truth_sign"},
    "match": {"variant", "block", "overlap", "margin", "ma_window", "diagonal", "sum_tables",
              "workers"},
    "search": {"max_dx", "max_dy", "u_min", "u_max", "v_min", "v_max"},
    "noise": {"multiplier_pct", "integrator_pct", "noise_pct", "seed", "rms_source",
              "integrator_per_step"},
    "sweep": {"block", "overlap", "multiplier_pct", "integrator_pct", "noise_pct"},
    "output": {"dir"},
}


def read_document(text: str) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"),
                                   default_section="__none__")
    try:
        cp.read_string(text)
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"{exc.section}.{exc.option}", "given more than once") from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(exc.section, "section given more than once") from None
    except configparser.Error as exc:
        raise ConfigError("document", str(exc).splitlines()[0]) from None
    for section in cp.sections():
        if section not in _SCHEMA:
            raise ConfigError(section, "unknown section")
        for key in cp[section]:
            if key not in _SCHEMA[section]:
                raise ConfigError(f"{section}.{key}", "unknown key")
    return cp


def parse_config(text: str, base_dir: Path | None = None, check_files: bool = True,
                 overrides: dict[str, str] | None = None) -> ExperimentConfig:
    """Validate a configuration document and apply defaults.

    ``overrides`` maps ``"section.key"`` to raw string values and is applied
    before validation, so command-line flags get the same checks.
    """
    cp = read_document(text)
    for dotted, value in (overrides or {}).items():
        section, key = dotted.split(".", 1)
        if section not in _SCHEMA or key not in _SCHEMA[section]:
            raise ConfigError(dotted, "unknown key")
        if not cp.has_section(section):
            cp.add_section(section)
        cp.set(section, key, str(value))
    return _build(cp, base_dir, check_files)


def load_config(path, check_files: bool = True, overrides=None) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read config: {exc.strerror or exc}") from None
    return parse_config(text, path.parent.resolve(), check_files, overrides)


def _get(cp, section, key):
    if cp.has_section(section) and cp.has_option(section, key):
        value = cp.get(section, key).strip()
        if value == "":
            raise ConfigError(f"{section}.{key}", "empty value")
        return value
    return None


def _build(cp, base_dir, check_files) -> ExperimentConfig:
    g = lambda s, k: _get(cp, s, k)  # noqa: E731

    root_raw = os.environ.get(DATA_ROOT_ENV) or g("data", "root")
    root = Path(root_raw) if root_raw else None
    if root is not None and not root.is_absolute() and base_dir is not None:
        root = base_dir / root
    anchor = root if root is not None else base_dir

    def data_path(key, required):
        raw = g("data", key)
        if raw is None:
            if required:
                raise ConfigError(f"data.{key}", "required")
            return None
        p = Path(raw)
        if not p.is_absolute() and anchor is not None:
            p = anchor / p
        if check_files and not p.is_file():
            raise ConfigError(f"data.{key}", f"file not found: {p}")
        return p

    kw = dict(
        template_path=data_path("template", True),
        reference_path=data_path("reference", True),
        ground_truth_path=data_path("ground_truth", False),
        data_root=root,
    )
    if (v := g("data", "truth_scale")) is not None:
        kw["truth_scale"] = _float("data.truth_scale", v)
        if not kw["truth_scale"] > 0:
            raise ConfigError("data.truth_scale", "must be positive")
    if (v := g("data", "truth_unknown")) is not None:
        kw["truth_unknown"] = _int("data.truth_unknown", v)
    if (v := g("data", "truth_sign")) is not None:
        kw["truth_sign"] = _int("data.truth_sign", v)
        if kw["truth_sign"] not in (-1, 1):
            raise ConfigError("data.truth_sign", "must be 1 or -1")

    if (v := g("match", "variant")) is not None:
        kw["variant"] = _choice("match.variant", v, VARIANTS)
    block = 15
    if (v := g("match", "block")) is not None:
        block = _int("match.block", v)
        if block < 2:
            raise ConfigError("match.block", "must be >= 2")
    kw["block"] = block
    overlap = default_overlap(block)
    if (v := g("match", "overlap")) is not None:
        overlap = _int("match.overlap", v)
    if not 0 <= overlap < block:
        raise ConfigError("match.overlap", f"must be in [0, block-1] = [0, {block - 1}], got {overlap}")
    kw["overlap"] = overlap
    if (v := g("match", "margin")) is not None:
        kw["margin"] = _int("match.margin", v)
        if kw["margin"] < 0:
            raise ConfigError("match.margin", "must be non-negative")
    if (v := g("match", "ma_window")) is not None:
        kw["ma_window"] = _int("match.ma_window", v)
        if not 1 <= kw["ma_window"] <= block:
            raise ConfigError("match.ma_window", f"must be in [1, block] = [1, {block}]")
    if (v := g("match", "diagonal")) is not None:
        kw["diagonal"] = _choice("match.diagonal", v, ("main", "anti"))
    if (v := g("match", "sum_tables")) is not None:
        kw["sum_tables"] = _bool("match.sum_tables", v)
    if (v := g("match", "workers")) is not None:
        kw["workers"] = _int("match.workers", v)
        if kw["workers"] < 1:
            raise ConfigError("match.workers", "must be >= 1")

    kw["search"] = _search(g)
    kw["noise"] = _noise(cp, g)
    kw["sweep"] = _sweep(g, block)
    if (v := g("output", "dir")) is not None:
        kw["output_dir"] = Path(v)
    return ExperimentConfig(**kw)


def _search(g) -> SearchWindow:
    max_dx = _int("search.max_dx", g("search", "max_dx")) if g("search", "max_dx") else 16
    max_dy = _int("search.max_dy", g("search", "max_dy")) if g("search", "max_dy") else 2
    if max_dx < 0:
        raise ConfigError("search.max_dx", "must be non-negative")
    if max_dy < 0:
        raise ConfigError("search.max_dy", "must be non-negative")
    bounds = {"u_min": -max_dx, "u_max": max_dx, "v_min": -max_dy, "v_max": max_dy}
    for key in bounds:
        if (v := g("search", key)) is not None:
            bounds[key] = _int(f"search.{key}", v)
    if bounds["u_min"] > bounds["u_max"]:
        raise ConfigError("search.u_min", "exceeds u_max")
    if bounds["v_min"] > bounds["v_max"]:
        raise ConfigError("search.v_min", "exceeds v_max")
    return SearchWindow(**bounds)


def _pct(key, raw):
    p = _float(key, raw)
    if p < 0:
        raise ConfigError(key, "must be non-negative")
    return p


def _noise(cp, g) -> NoiseConfig | None:
    if not cp.has_section("noise"):
        return None
    kw = {}
    if (v := g("noise", "noise_pct")) is not None:
        kw["multiplier_pct"] = kw["integrator_pct"] = _pct("noise.noise_pct", v)
    if (v := g("noise", "multiplier_pct")) is not None:
        kw["multiplier_pct"] = _pct("noise.multiplier_pct", v)
    if (v := g("noise", "integrator_pct")) is not None:
        kw["integrator_pct"] = _pct("noise.integrator_pct", v)
    if (v := g("noise", "seed")) is not None:
        kw["seed"] = _int("noise.seed", v)
        if not 0 <= kw["seed"] < 2**64:
            raise ConfigError("noise.seed", "must be in [0, 2**64)")
    if (v := g("noise", "rms_source")) is not None:
        kw["rms_source"] = _choice("noise.rms_source", v, ("template", "reference"))
    if (v := g("noise", "integrator_per_step")) is not None:
        kw["integrator_per_step"] = _bool("noise.integrator_per_step", v)
    return NoiseConfig(**kw)


def _sweep(g, block: int) -> SweepConfig:
    kw = {}
    if (v := g("sweep", "block")) is not None:
        kw["blocks"] = _list("sweep.block", v, _int)
        if min(kw["blocks"]) < 2:
            raise ConfigError("sweep.block", "every block size must be >= 2")
    if (v := g("sweep", "overlap")) is not None:
        kw["overlaps"] = _overlap_axis("sweep.overlap", v)
    for key, attr in (("multiplier_pct", "multiplier_pcts"), ("integrator_pct", "integrator_pcts"),
                      ("noise_pct", "noise_pcts")):
        if (v := g("sweep", key)) is not None:
            kw[attr] = _list(f"sweep.{key}", v, _pct)
    sweep = SweepConfig(**kw)
    for b in sweep.blocks or (block,):
        for o in overlaps_for(sweep.overlaps, b) if sweep.overlaps else ():
            if not 0 <= o < b:
                raise ConfigError("sweep.overlap", f"overlap {o} invalid for block {b}")
    return sweep


# --------------------------------------------------------------------------
# rendering and sweep expansion
# --------------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render_config(cfg: ExperimentConfig) -> str:
    lines = ["[data]"]
    if cfg.data_root is not None:
        lines.append(f"root = {cfg.data_root}")
    lines += [f"template = {cfg.template_path}", f"reference = {cfg.reference_path}"]
    if cfg.ground_truth_path is not None:
        lines.append(f"ground_truth = {cfg.ground_truth_path}")
    lines += [f"truth_scale = {_fmt(cfg.truth_scale)}", f"truth_unknown = {cfg.truth_unknown}",
              f"truth_sign = {cfg.truth_sign}", "", "[match]",
              f"variant = {cfg.variant}", f"block = {cfg.block}", f"overlap = {cfg.overlap}",
              f"margin = {cfg.margin}"]
    if cfg.ma_window is not None:
        lines.append(f"ma_window = {cfg.ma_window}")
    lines += [f"diagonal = {cfg.diagonal}", f"sum_tables = {_fmt(cfg.sum_tables)}",
              f"workers = {cfg.workers}", "", "[search]"]
    s = cfg.search
    lines += [f"u_min = {s.u_min}", f"u_max = {s.u_max}", f"v_min = {s.v_min}", f"v_max = {s.v_max}"]
    if cfg.noise is not None:
        n = cfg.noise
        lines += ["", "[noise]", f"multiplier_pct = {_fmt(n.multiplier_pct)}",
                  f"integrator_pct = {_fmt(n.integrator_pct)}", f"seed = {n.seed}",
                  f"rms_source = {n.rms_source}",
                  f"integrator_per_step = {_fmt(n.integrator_per_step)}"]
    sw = cfg.sweep
    if not sw.empty:
        lines += ["", "[sweep]"]
        if sw.blocks:
            lines.append("block = " + ", ".join(map(str, sw.blocks)))
        if sw.overlaps:
            ov = sw.overlaps if isinstance(sw.overlaps, str) else ", ".join(map(str, sw.overlaps))
            lines.append(f"overlap = {ov}")
        for key, vals in (("multiplier_pct", sw.multiplier_pcts), ("integrator_pct", sw.integrator_pcts),
                          ("noise_pct", sw.noise_pcts)):
            if vals:
                lines.append(f"{key} = " + ", ".join(_fmt(v) for v in vals))
    lines += ["", "[output]", f"dir = {cfg.output_dir}", ""]
    return "\n".join(lines)


@dataclass(frozen=True)
class SweepRun:
    label: str
    config: ExperimentConfig


def expand_sweep(cfg: ExperimentConfig) -> list[SweepRun]:
    """Every run of the sweep, in a fixed order (block, overlap, noise axes)."""
    sw = cfg.sweep
    base = replace(cfg, sweep=SweepConfig())
    if sw.empty:
        return [SweepRun("run000", base)]
    runs = []
    for block in sw.blocks or (cfg.block,):
        if sw.overlaps:
            overlaps = overlaps_for(sw.overlaps, block)
        else:
            overlaps = [cfg.overlap if block == cfg.block else default_overlap(block)]
        for overlap in overlaps:
            noise_axes = itertools.product(sw.noise_pcts or (None,), sw.multiplier_pcts or (None,),
                                           sw.integrator_pcts or (None,))
            for both, mult, integ in noise_axes:
                noise = cfg.noise or NoiseConfig()
                if both is not None:
                    noise = replace(noise, multiplier_pct=both, integrator_pct=both)
                if mult is not None:
                    noise = replace(noise, multiplier_pct=mult)
                if integ is not None:
                    noise = replace(noise, integrator_pct=integ)
                run_cfg = replace(
                    base, block=block, overlap=overlap,
                    ma_window=cfg.ma_window if block == cfg.block else None,
                    noise=None if cfg.noise is None and noise.silent else noise,
                )
                label = f"run{len(runs):03d}_b{block}_o{overlap}"
                if run_cfg.noise is not None:
                    label += f"_m{noise.multiplier_pct:g}_i{noise.integrator_pct:g}"
                runs.append(SweepRun(label, run_cfg))
    return runs
