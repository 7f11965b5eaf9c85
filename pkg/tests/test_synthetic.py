import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stereocorr.synthetic import random_translated_pair, translated_pair


@given(st.integers(-4, 4), st.integers(-4, 4), st.integers(0, 2**32 - 1))
def test_translation_relation(dx, dy, seed):
    img = np.random.default_rng(seed).random((30, 30))
    t, r = translated_pair(img, dx, dy, 12, 8, 8)
    for y in range(12):
        for x in range(12):
            if 0 <= x + dx < 12 and 0 <= y + dy < 12:
                assert r[x + dx, y + dy] == t[x, y]


def test_crop_must_fit():
    with pytest.raises(ValueError):
        translated_pair(np.zeros((10, 10)), 3, 0, 8, 1, 1)


def test_random_pair_is_reproducible():
    img = np.random.default_rng(0).random((60, 80))
    a = random_translated_pair(img, 40, 5, np.random.default_rng(1))
    b = random_translated_pair(img, 40, 5, np.random.default_rng(1))
    assert a[2:] == b[2:] and np.array_equal(a[0].pixels, b[0].pixels)
    assert max(abs(a[2]), abs(a[3])) <= 5
