import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from stereocorr.grid import extract_block, extract_diagonal, partition
from stereocorr.image_io import GrayImage
from stereocorr.metrics import OpCount
from stereocorr.ncc import (ScoreSurface, SearchWindow, best_shift, build_sum_tables, match_ncc,
                            moving_average, ncc_diagonal, ncc_full)

W3 = SearchWindow.symmetric(3, 3)


def rand_img(seed, h, w=None):
    return GrayImage(np.random.default_rng(seed).random((h, w or h)))


# --- sum tables -----------------------------------------------------------

def test_sum_table_constant():
    tab = build_sum_tables(np.ones((2, 2)))
    assert tab.rect_sum(0, 0, 2, 2) == 4
    assert tab.rect_sum(1, 1, 0, 0) == 0
    assert tab.running_sum.shape == (3, 3) and not tab.running_sum[0].any()


def test_sum_table_rectangles_match_direct():
    img = rand_img(1, 16)
    rows = img.pixels.tolist()
    sq = [[v * v for v in row] for row in rows]
    tab = build_sum_tables(img)
    for y in range(12):
        for x in range(12):
            assert tab.rect_sum(x, y, 5, 5) == pytest.approx(
                oracles.rect_sum_literal(rows, x, y, 5, 5), abs=1e-9)
            assert tab.rect_sum_sq(x, y, 5, 5) == pytest.approx(
                oracles.rect_sum_literal(sq, x, y, 5, 5), abs=1e-9)


# --- moving average -------------------------------------------------------

def test_moving_average_examples():
    np.testing.assert_allclose(moving_average([5, 5, 5, 5], 3), [5, 5, 5, 5])
    np.testing.assert_allclose(moving_average([1, 2, 3, 4], 1), [1, 2, 3, 4])
    np.testing.assert_allclose(moving_average([1, 2, 3, 4], 2), [1, 1.5, 2.5, 3.5])


def test_moving_average_errors():
    with pytest.raises(ValueError):
        moving_average([], 1)
    with pytest.raises(ValueError):
        moving_average([1, 2], 3)


@given(st.lists(st.floats(-10, 10), min_size=1, max_size=30), st.data())
def test_moving_average_matches_literal(xs, data):
    w = data.draw(st.integers(1, len(xs)))
    np.testing.assert_allclose(moving_average(xs, w), oracles.causal_mean(xs, w), atol=1e-9)


# --- full NCC -------------------------------------------------------------

def test_self_match_scores_one():
    ref = rand_img(2, 20)
    tb = extract_block(ref, (6, 7), 5)
    s = ncc_full(tb, ref, (6, 7), SearchWindow(0, 0, 0, 0))
    assert s.at(0, 0) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("tables", [False, True])
def test_full_ncc_matches_literal(tables):
    ref = rand_img(3, 15)
    tb = rand_img(4, 7)
    origin = (4, 4)
    s = ncc_full(tb, ref, origin, W3, build_sum_tables(ref) if tables else None)
    rows, trows = ref.pixels.tolist(), tb.pixels.tolist()
    for v in range(-3, 4):
        for u in range(-3, 4):
            x, y = origin[0] + u, origin[1] + v
            if 0 <= x <= 8 and 0 <= y <= 8:
                assert s.at(u, v) == pytest.approx(oracles.ncc_literal(trows, rows, x, y), abs=1e-9)
            else:
                assert not s.valid[v + 3, u + 3] and np.isnan(s.at(u, v))


def test_out_of_bounds_shifts_are_invalid_not_errors():
    ref = rand_img(5, 10)
    s = ncc_full(extract_block(ref, (0, 0), 5), ref, (0, 0), SearchWindow.symmetric(2, 2))
    assert s.valid[2:, 2:].all() and not s.valid[:2].any() and not s.valid[:, :2].any()


def test_degenerate_template_is_invalid_everywhere():
    ref = rand_img(6, 12)
    s = ncc_full(np.full((4, 4), 0.3), ref, (4, 4), SearchWindow.symmetric(1, 1))
    assert not s.valid.any()


def test_degenerate_reference_region_is_invalid():
    ref = np.random.default_rng(7).random((12, 12))
    ref[:6, :6] = 0.5
    s = ncc_full(rand_img(8, 4), ref, (1, 1), SearchWindow(0, 0, 0, 0))
    assert not s.valid.any()


def test_counter_full_is_block_squared_per_shift():
    c = OpCount()
    ncc_full(rand_img(9, 6), rand_img(10, 10), (2, 2), SearchWindow.symmetric(1, 1), counter=c)
    assert c.multiplies == 9 * 36


nccs = st.tuples(st.integers(0, 2**32 - 1), st.floats(-0.5, 0.5), st.floats(0.05, 5.0))


@given(nccs)
def test_affine_invariance(args):
    seed, a, b = args
    ref = rand_img(seed, 14)
    t = np.random.default_rng(seed + 1).random((6, 6)) * 0.2
    s1 = ncc_full(t, ref, (4, 4), W3)
    s2 = ncc_full(a + b * t, ref, (4, 4), W3)
    np.testing.assert_array_equal(s1.valid, s2.valid)
    np.testing.assert_allclose(s1.scores[s1.valid], s2.scores[s2.valid], atol=1e-9)


@given(st.integers(0, 2**32 - 1), st.integers(2, 8))
def test_tables_equal_direct_and_bounded(seed, b):
    ref = rand_img(seed, b + 8)
    t = np.random.default_rng(seed ^ 0xABCD).random((b, b))
    direct = ncc_full(t, ref, (4, 4), SearchWindow.symmetric(4, 4))
    tabled = ncc_full(t, ref, (4, 4), SearchWindow.symmetric(4, 4), build_sum_tables(ref))
    np.testing.assert_array_equal(direct.valid, tabled.valid)
    np.testing.assert_allclose(direct.scores[direct.valid], tabled.scores[tabled.valid], atol=1e-9)
    sc = direct.scores[direct.valid]
    assert ((sc >= -1 - 1e-9) & (sc <= 1 + 1e-9)).all()


@given(st.integers(0, 2**32 - 1), st.integers(-3, 3), st.integers(-3, 3))
def test_cut_template_peaks_at_true_offset(seed, u, v):
    ref = rand_img(seed, 16)
    tb = extract_block(ref, (5 + u, 5 + v), 5)
    s = ncc_full(tb, ref, (5, 5), W3)
    assert s.at(u, v) == pytest.approx(1.0, abs=1e-9)
    assert best_shift(s)[:2] == (u, v)


# --- diagonal NCC ---------------------------------------------------------

def test_diagonal_self_match():
    ref = rand_img(11, 20)
    d = extract_diagonal(ref, (7, 3), 6)
    assert ncc_diagonal(d, ref, (7, 3), SearchWindow(0, 0, 0, 0)).at(0, 0) == pytest.approx(1, abs=1e-9)


@pytest.mark.parametrize("which,ma", [("main", None), ("main", 2), ("anti", 5), ("anti", 3)])
def test_diagonal_matches_literal(which, ma):
    ref = rand_img(12, 11)
    diag = np.random.default_rng(13).random(5)
    s = ncc_diagonal(diag, ref, (3, 3), W3, ma, which=which)
    rows = ref.pixels.tolist()
    for v in range(-3, 4):
        for u in range(-3, 4):
            x, y = 3 + u, 3 + v
            if 0 <= x <= 6 and 0 <= y <= 6:
                want = oracles.diagonal_ncc_literal(diag.tolist(), rows, x, y, ma or 5, which == "anti")
                assert s.at(u, v) == pytest.approx(want, abs=1e-9)


@pytest.mark.parametrize("b", [5, 15, 128])
def test_multiply_count_ratio_is_block(b):
    ref = rand_img(b, b + 2)
    full, diag = OpCount(), OpCount()
    w = SearchWindow.symmetric(1, 1)
    ncc_full(extract_block(ref, (1, 1), b), ref, (1, 1), w, counter=full)
    ncc_diagonal(extract_diagonal(ref, (1, 1), b), ref, (1, 1), w, counter=diag)
    assert diag.multiplies == 9 * b
    assert full.multiplies == b * diag.multiplies


# --- best shift -----------------------------------------------------------

def surface(window, scores):
    scores = np.asarray(scores, dtype=float)
    return ScoreSurface(window, scores, ~np.isnan(scores))


def test_single_valid_score():
    s = surface(SearchWindow.symmetric(1, 1), [[np.nan] * 3, [np.nan, np.nan, 0.2], [np.nan] * 3])
    assert best_shift(s) == (1, 0, 0.2)


def test_uniform_surface_prefers_zero():
    assert best_shift(surface(SearchWindow.symmetric(2, 1), np.ones((3, 5)))) == (0, 0, 1.0)


def test_uniform_surface_without_zero():
    w = SearchWindow(2, 4, -1, 1)
    assert best_shift(surface(w, np.ones((3, 3))), "minimize")[:2] == (2, 0)


def test_all_invalid_raises():
    with pytest.raises(ValueError):
        best_shift(surface(SearchWindow(0, 0, 0, 0), [[np.nan]]))


@given(st.integers(0, 2**32 - 1), st.sampled_from(["maximize", "minimize"]))
def test_best_shift_matches_scan(seed, mode):
    rng = np.random.default_rng(seed)
    w = SearchWindow(int(rng.integers(-3, 1)), int(rng.integers(0, 3)),
                     int(rng.integers(-2, 1)), int(rng.integers(0, 3)))
    sc = rng.integers(0, 4, size=w.shape).astype(float)  # small range forces ties
    sc[rng.random(w.shape) < 0.2] = np.nan
    s = surface(w, sc)
    entries = [(u, v, None if np.isnan(sc[v - w.v_min, u - w.u_min]) else sc[v - w.v_min, u - w.u_min])
               for v in range(w.v_min, w.v_max + 1) for u in range(w.u_min, w.u_max + 1)]
    want = oracles.best_shift_scan(entries, mode == "maximize")
    if want is None:
        with pytest.raises(ValueError):
            best_shift(s, mode)
    else:
        assert best_shift(s, mode) == want


# --- whole-image matching -------------------------------------------------

@pytest.mark.parametrize("variant", ["full", "diagonal"])
def test_identical_images(variant):
    img = rand_img(14, 24)
    g = partition(24, 24, 6, 0, margin=2)
    m = match_ncc(img, img, g, SearchWindow.symmetric(2, 2), variant)
    assert m.valid.all() and not m.dx.any() and not m.dy.any()
    np.testing.assert_allclose(m.score, 1.0, atol=1e-9)


@pytest.mark.parametrize("variant", ["full", "diagonal"])
def test_synthetic_translation(variant):
    base = np.random.default_rng(15).random((40, 46))
    t = GrayImage(base[3:33, 3:33])
    r = GrayImage(base[2:32, 0:30])  # r(x+3, y+1) == t(x, y)
    g = partition(30, 30, 6, 0, margin=4)
    m = match_ncc(t, r, g, SearchWindow.symmetric(4, 2), variant)
    assert m.valid.all() and (m.dx == 3).all() and (m.dy == 1).all()


@pytest.mark.parametrize("variant", ["full", "diagonal"])
def test_dimmed_template_same_map(variant):
    img = rand_img(16, 32)
    ref = GrayImage(np.roll(img.pixels, 2, axis=1))
    g = partition(32, 32, 8, 2, margin=3)
    w = SearchWindow.symmetric(3, 1)
    a = match_ncc(img, ref, g, w, variant)
    b = match_ncc(GrayImage(img.pixels * 0.1), ref, g, w, variant)
    assert np.array_equal(a.dx, b.dx) and np.array_equal(a.dy, b.dy)
    assert np.array_equal(a.valid, b.valid)


@pytest.mark.parametrize("variant", ["full", "diagonal"])
def test_workers_do_not_change_result(variant):
    img = rand_img(17, 30)
    ref = GrayImage(np.roll(img.pixels, -1, axis=0))
    g = partition(30, 30, 5, 2, margin=2)
    w = SearchWindow.symmetric(2, 2)
    assert match_ncc(img, ref, g, w, variant).same_as(match_ncc(img, ref, g, w, variant, workers=3))


def test_unknown_variant():
    img = rand_img(18, 10)
    with pytest.raises(ValueError):
        match_ncc(img, img, partition(10, 10, 5), SearchWindow(0, 0, 0, 0), "other")
