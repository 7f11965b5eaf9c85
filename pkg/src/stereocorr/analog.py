"""Behavioral model of the analog correlator: keyed noise and power rollup.

Noise is generated from a counter-based hash so that every deviate is a
pure function of ``(seed, stage, block_id, shift_id, sample_idx)``.  Blocks
can therefore be evaluated in any order, on any number of threads, and the
result never changes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

import numba
import numpy as np

from .image_io import as_pixels


class Stage(IntEnum):
    # MULTIPLIER also covers the absolute-value circuit of the SAD pipeline:
    # both are the per-sample nonlinearity feeding the integrator.
    MULTIPLIER = 0
    INTEGRATOR = 1


_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_STAGE_SALT = np.uint64(0xD1B54A32D192ED03)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0


@numba.njit(cache=True, nogil=True)
def _mix(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@numba.njit(cache=True, nogil=True)
def _base_key(seed, stage, block_id, shift_id):
    h = _mix(np.uint64(seed) ^ (np.uint64(stage + 1) * _STAGE_SALT))
    h = _mix(h ^ np.uint64(block_id))
    return _mix(h + np.uint64(shift_id) * _GOLDEN)


# Acklam's rational approximation to the inverse normal CDF (|rel err| < 1.2e-9)
_A0, _A1, _A2, _A3, _A4, _A5 = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B0, _B1, _B2, _B3, _B4 = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                           6.680131188771972e+01, -1.328068155288572e+01)
_C0, _C1, _C2, _C3, _C4, _C5 = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D0, _D1, _D2, _D3 = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                      3.754408661907416e+00)
_P_LOW = 0.02425


@numba.njit(cache=True, nogil=True)
def _inverse_normal_cdf(p):
    if p < _P_LOW or p > 1.0 - _P_LOW:
        q = math.sqrt(-2.0 * math.log(min(p, 1.0 - p)))
        x = ((((((_C0 * q + _C1) * q + _C2) * q + _C3) * q + _C4) * q + _C5)
             / ((((_D0 * q + _D1) * q + _D2) * q + _D3) * q + 1.0))
        return x if p < 0.5 else -x
    q = p - 0.5
    r = q * q
    return ((((((_A0 * r + _A1) * r + _A2) * r + _A3) * r + _A4) * r + _A5) * q
            / (((((_B0 * r + _B1) * r + _B2) * r + _B3) * r + _B4) * r + 1.0))


@numba.njit(cache=True, nogil=True)
def _normal_from_base(base, sample_idx):
    h = _mix(base ^ (np.uint64(sample_idx) * _GOLDEN))
    return _inverse_normal_cdf((np.float64(h >> _S11) + 0.5) * _INV53)  # p in (0, 1)


@numba.njit(cache=True, nogil=True)
def _fill_normals(base, out):
    for k in range(out.shape[0]):
        out[k] = _normal_from_base(base, k)


@numba.njit(cache=True, nogil=True)
def _standard_normal(seed, stage, block_id, shift_id, sample_idx):
    return _normal_from_base(_base_key(seed, stage, block_id, shift_id), sample_idx)


@numba.njit(cache=True, nogil=True)
def _normals_kernel(seed, stage, block_ids, shift_id, out):
    for i in range(block_ids.shape[0]):
        _fill_normals(_base_key(seed, stage, block_ids[i], shift_id), out[i])


def standard_normals(seed: int, stage: Stage, block_ids, shift_id: int, n_samples: int) -> np.ndarray:
    """Keyed standard-normal deviates, shape ``(len(block_ids), n_samples)``."""
    block_ids = np.ascontiguousarray(block_ids, dtype=np.int64)
    out = np.empty((block_ids.shape[0], n_samples), dtype=np.float64)
    _normals_kernel(np.uint64(seed), int(stage), block_ids, int(shift_id), out)
    return out


@dataclass(frozen=True)
class NoiseSpec:
    """Noise levels as fractions of ``signal_rms`` (0.01 == 1 %).

    With ``integrator_per_step`` (the default) the integrator contributes one
    deviate per accumulated input sample; otherwise one per sampled
    integrator output (one per 1-D integration run).
    """

    multiplier_pct: float = 0.0
    integrator_pct: float = 0.0
    seed: int = 0
    signal_rms: float = 1.0
    integrator_per_step: bool = True

    def __post_init__(self):
        if self.multiplier_pct < 0 or self.integrator_pct < 0:
            raise ValueError("noise percentages must be non-negative")
        if self.signal_rms < 0:
            raise ValueError("signal_rms must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")

    def sigma(self, stage: Stage) -> float:
        pct = self.multiplier_pct if stage == Stage.MULTIPLIER else self.integrator_pct
        return self.signal_rms * pct

    @property
    def is_silent(self) -> bool:
        return self.sigma(Stage.MULTIPLIER) == 0 and self.sigma(Stage.INTEGRATOR) == 0


def image_rms(img) -> float:
    px = as_pixels(img)
    if px.size == 0:
        raise ValueError("image is empty")
    return float(np.sqrt(np.mean(px * px)))


def noise_sample(spec: NoiseSpec, stage: Stage, key: tuple[int, int, int]) -> float:
    sigma = spec.sigma(stage)
    if sigma == 0:
        return 0.0
    block_id, shift_id, sample_idx = key
    return sigma * _standard_normal(np.uint64(spec.seed), int(stage), block_id, shift_id, sample_idx)


def accumulate(samples: np.ndarray, noise: NoiseSpec | None, block_ids, shift_id: int,
               runs: int = 1) -> np.ndarray:
    """Integrate per-block sample streams, injecting stage noise.

    ``samples`` has shape ``(n_blocks, n_samples)`` and holds the multiplier
    (or absolute-value) outputs.  The stream is integrated in ``runs`` equal
    1-D runs whose outputs are summed downstream, e.g. one run per block row.
    """
    if noise is None or noise.is_silent:
        return samples.sum(axis=1)
    n_samples = samples.shape[1]
    sig_m = noise.sigma(Stage.MULTIPLIER)
    if sig_m:
        samples = samples + sig_m * standard_normals(
            noise.seed, Stage.MULTIPLIER, block_ids, shift_id, n_samples)
    total = samples.sum(axis=1)
    sig_i = noise.sigma(Stage.INTEGRATOR)
    if sig_i:
        n_int = n_samples if noise.integrator_per_step else runs
        g = standard_normals(noise.seed, Stage.INTEGRATOR, block_ids, shift_id, n_int)
        total = total + sig_i * g.sum(axis=1)
    return total


def dynamic_range_to_noise_pct(dr_db: float) -> float:
    return 10.0 ** (-dr_db / 20.0)


# --------------------------------------------------------------------------
# Power
# --------------------------------------------------------------------------

# (name, mW per unit, units per channel pair)
POWER_UNITS = (
    ("LPF", 2.8, 2),
    ("Summer", 0.549, 2),
    ("Multiplier", 0.00183, 1),
    ("Integrator", 0.024, 1),
)


@dataclass(frozen=True)
class PowerEntry:
    name: str
    unit_power: float  # mW
    quantity: int
    subtotal: float  # mW


@dataclass(frozen=True)
class PowerReport:
    channels: int
    entries: tuple[PowerEntry, ...]

    @property
    def total(self) -> float:
        return math.fsum(e.subtotal for e in self.entries)

    def format(self) -> str:
        lines = [f"analog power estimate, {self.channels} channels",
                 f"{'component':<12}{'unit mW':>12}{'qty':>6}{'subtotal mW':>16}"]
        for e in self.entries:
            lines.append(f"{e.name:<12}{e.unit_power:>12.5g}{e.quantity:>6d}{e.subtotal:>16.10g}")
        lines.append(f"{'total':<12}{'':>12}{'':>6}{self.total:>16.10g}")
        return "\n".join(lines)


def power_estimate(channels: int) -> PowerReport:
    """Table-1 style rollup; channels pair up as (template, reference)."""
    if channels < 0 or channels % 2:
        raise ValueError(f"channel count must be a non-negative even number, got {channels}")
    pairs = channels // 2
    entries = tuple(
        PowerEntry(name, unit, per_pair * pairs, unit * per_pair * pairs)
        for name, unit, per_pair in POWER_UNITS
    )
    return PowerReport(channels, entries)
