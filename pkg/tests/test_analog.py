import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stereocorr.analog import (NoiseSpec, Stage, accumulate, dynamic_range_to_noise_pct, image_rms,
                               noise_sample, power_estimate, standard_normals)
from stereocorr.image_io import GrayImage


def test_image_rms_examples():
    assert image_rms(np.full((3, 4), 0.3)) == pytest.approx(0.3)
    assert image_rms(np.zeros((2, 2))) == 0
    assert image_rms(np.array([[0.6, 0.8]])) == pytest.approx(math.sqrt(0.5), abs=1e-15)


def test_image_rms_empty():
    with pytest.raises(ValueError):
        image_rms(np.zeros((0, 3)))


def test_zero_pct_gives_zero():
    spec = NoiseSpec(0.0, 0.0, seed=9, signal_rms=0.7)
    assert all(noise_sample(spec, st_, (b, s, k)) == 0
               for st_ in Stage for b in range(3) for s in range(3) for k in range(3))


def test_same_key_same_value():
    spec = NoiseSpec(0.1, 0.2, seed=5, signal_rms=0.4)
    for key in [(0, 0, 0), (12, 7, 99), (2**40, 3, 1)]:
        assert noise_sample(spec, Stage.INTEGRATOR, key) == noise_sample(spec, Stage.INTEGRATOR, key)


def test_keys_are_separated():
    spec = NoiseSpec(0.1, 0.1, seed=5)
    vals = {noise_sample(spec, stage, (b, s, k))
            for stage in Stage for b in range(4) for s in range(4) for k in range(4)}
    assert len(vals) == 2 * 64


def test_batch_matches_scalar():
    spec = NoiseSpec(0.3, 0.0, seed=17, signal_rms=2.0)
    batch = standard_normals(17, Stage.MULTIPLIER, [4, 9], 6, 5)
    for i, b in enumerate([4, 9]):
        for k in range(5):
            assert noise_sample(spec, Stage.MULTIPLIER, (b, 6, k)) == pytest.approx(0.6 * batch[i, k], rel=1e-15)


def test_large_sample_statistics():
    # one million deviates at pct 0.1, rms 1.0
    spec_sigma = 0.1
    g = standard_normals(2024, Stage.MULTIPLIER, np.arange(1000), 0, 1000).ravel() * spec_sigma
    assert abs(g.mean()) <= 3 * spec_sigma / 1000
    assert g.std() == pytest.approx(spec_sigma, rel=0.01)


def test_deviates_look_gaussian():
    g = standard_normals(1, Stage.INTEGRATOR, np.arange(200), 3, 1000).ravel()
    # fourth moment of a normal is 3; tail mass beyond 3 sigma is 0.27 %
    assert np.mean(g**4) == pytest.approx(3.0, rel=0.03)
    assert np.mean(np.abs(g) > 3) == pytest.approx(0.0027, rel=0.15)


@given(st.floats(0.001, 1.0), st.floats(0.01, 2.0), st.integers(0, 2**64 - 1))
def test_empirical_sigma(pct, rms, seed):
    spec = NoiseSpec(pct, 0.0, seed=seed, signal_rms=rms)
    g = standard_normals(seed, Stage.MULTIPLIER, np.arange(100), 1, 1000).ravel() * spec.sigma(Stage.MULTIPLIER)
    # 1e5 samples: the sd of the estimate is about 0.22 %, so 1 % is a wide margin
    assert g.std() == pytest.approx(rms * pct, rel=0.01)


def test_accumulate_silent_is_plain_sum():
    x = np.random.default_rng(0).random((3, 8))
    np.testing.assert_array_equal(accumulate(x, None, [0, 1, 2], 0), x.sum(axis=1))
    np.testing.assert_array_equal(accumulate(x, NoiseSpec(), [0, 1, 2], 0), x.sum(axis=1))


@pytest.mark.parametrize("per_step,runs,n_int", [(True, 4, 16), (False, 4, 4)])
def test_accumulate_integrator_variance(per_step, runs, n_int):
    x = np.zeros((20000, 16))
    spec = NoiseSpec(0.0, 0.5, seed=3, integrator_per_step=per_step)
    out = accumulate(x, spec, np.arange(20000), 0, runs=runs)
    assert out.std() == pytest.approx(0.5 * math.sqrt(n_int), rel=0.03)


def test_noise_spec_validation():
    for bad in (dict(multiplier_pct=-0.1), dict(signal_rms=-1), dict(seed=-1), dict(seed=2**64)):
        with pytest.raises(ValueError):
            NoiseSpec(**bad)


@pytest.mark.parametrize("db,pct", [(40, 0.01), (20, 0.1), (0, 1.0)])
def test_dynamic_range(db, pct):
    assert dynamic_range_to_noise_pct(db) == pytest.approx(pct, rel=1e-12)


def test_power_64_channels():
    rep = power_estimate(64)
    sub = {e.name: e.subtotal for e in rep.entries}
    qty = {e.name: e.quantity for e in rep.entries}
    assert qty == {"LPF": 64, "Summer": 64, "Multiplier": 32, "Integrator": 32}
    assert sub["LPF"] == pytest.approx(179.2)
    assert sub["Summer"] == pytest.approx(35.136)
    assert sub["Multiplier"] == pytest.approx(0.05856)
    assert sub["Integrator"] == pytest.approx(0.768)
    assert rep.total == pytest.approx(215.16256, abs=1e-9)
    assert "215.16256" in rep.format()


def test_power_32_and_zero():
    assert power_estimate(32).total == pytest.approx(89.6 + 17.568 + 0.02928 + 0.384)
    assert power_estimate(0).total == 0


@pytest.mark.parametrize("bad", [63, -2])
def test_power_rejects_bad_counts(bad):
    with pytest.raises(ValueError):
        power_estimate(bad)


@given(st.integers(0, 500), st.integers(0, 500))
def test_power_linear(a, b):
    pa, pb, pab = power_estimate(2 * a), power_estimate(2 * b), power_estimate(2 * (a + b))
    assert pab.total == pytest.approx(pa.total + pb.total, rel=1e-12, abs=1e-12)
    assert pab.total == pytest.approx(math.fsum(e.subtotal for e in pab.entries))


def test_rms_of_gray_image():
    assert image_rms(GrayImage(np.full((2, 2), 0.5))) == 0.5
