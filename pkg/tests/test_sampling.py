import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from isardip.sampling import (Mask, apply_mask, full_mask, gen_mask, invert_mask,
                              invert_pretransform, merge_complex, pretransform, split_complex)


def test_pixel_exact_count():
    m = gen_mask("pixel", 0.30, 100, 100, 7)
    assert (~m.observed).sum() == 3000


def test_zero_ratio_all_true():
    for kind in ("pixel", "column", "compressed"):
        assert gen_mask(kind, 0.0, 5, 7, 1).observed.all()


def test_column_mask_whole_columns():
    m = gen_mask("column", 0.5, 10, 10, 2)
    col_obs = m.observed.all(axis=0)
    col_miss = (~m.observed).all(axis=0)
    assert col_obs.sum() == 5 and col_miss.sum() == 5


def test_compressed_rows_and_columns():
    m = gen_mask("compressed", 0.25, 16, 20, 0)
    missing_rows = (~m.observed).all(axis=1).sum()
    missing_cols = (~m.observed).all(axis=0).sum()
    assert missing_rows == 4 and missing_cols == 5
    # everything not in a missing row/column is observed
    assert m.observed.sum() == (16 - 4) * (20 - 5)


def test_invalid_inputs():
    with pytest.raises(ValueError):
        gen_mask("pixel", 1.0, 4, 4, 0)
    with pytest.raises(ValueError):
        gen_mask("diagonal", 0.1, 4, 4, 0)
    with pytest.raises(ValueError, match="no observed"):
        gen_mask("column", 0.9, 4, 4, 0)


def test_masks_reproducible():
    assert gen_mask("pixel", 0.4, 9, 11, 5) == gen_mask("pixel", 0.4, 9, 11, 5)
    assert gen_mask("pixel", 0.4, 9, 11, 5) != gen_mask("pixel", 0.4, 9, 11, 6)


def test_apply_mask_examples():
    M = np.array([[1 + 1j, 2], [3, 4 - 1j]])
    obs = np.ones((2, 2), bool)
    obs[1, 1] = False
    np.testing.assert_array_equal(apply_mask(M, Mask(obs, "pixel", 0.25, 0)), [[1 + 1j, 2], [3, 0]])
    np.testing.assert_array_equal(apply_mask(M, full_mask(2, 2)), M)
    only = np.zeros((2, 2), bool)
    only[0, 0] = True
    assert np.count_nonzero(apply_mask(M, Mask(only, "pixel", 0.75, 0))) == 1
    with pytest.raises(ValueError):
        apply_mask(np.ones((3, 2)), full_mask(2, 2))


def test_pretransform_breaks_empty_columns(rng):
    mask = gen_mask("column", 0.5, 10, 10, 0)
    M = rng.standard_normal((10, 10)) + 1j * rng.standard_normal((10, 10))
    Mp, mp, perm = pretransform(apply_mask(M, mask), mask, 0)
    assert mp.observed.any(axis=0).all() and mp.observed.any(axis=1).all()
    np.testing.assert_array_equal(invert_pretransform(Mp, perm), apply_mask(M, mask))
    assert invert_mask(mp, perm) == mask


def test_pretransform_identity_roundtrip(rng):
    M = rng.standard_normal((6, 4))
    Mp, mp, perm = pretransform(M, full_mask(6, 4), 3)
    np.testing.assert_array_equal(invert_pretransform(Mp, perm), M)


def test_pretransform_too_sparse():
    obs = np.zeros((4, 4), bool)
    obs[0, 0] = True
    with pytest.raises(ValueError, match="too sparse"):
        pretransform(np.zeros((4, 4)), Mask(obs, "pixel", 15 / 16, 0), 0)


def test_split_merge():
    re, im = split_complex(np.array([[1 + 2j]]))
    assert re[0, 0] == 1 and im[0, 0] == 2
    assert not split_complex(np.ones((2, 3)))[1].any()
    with pytest.raises(ValueError):
        merge_complex(np.ones((2, 2)), np.ones((2, 3)))


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["pixel", "column", "compressed"]), st.floats(0, 0.6),
       st.integers(2, 20), st.integers(2, 20), st.integers(0, 2**31))
def test_mask_ratio_property(kind, ratio, rows, cols, seed):
    m = gen_mask(kind, ratio, rows, cols, seed)
    assert m.shape == (rows, cols)
    if kind == "pixel":
        assert abs(m.missing_ratio - ratio) <= 0.5 / (rows * cols) + 1e-12
    elif kind == "column":
        assert (~m.observed).all(axis=0).sum() == int(np.floor(ratio * cols + 0.5))
        assert (m.observed.all(axis=0) | (~m.observed).all(axis=0)).all()


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 12), st.integers(1, 12), st.integers(0, 1000))
def test_split_merge_property(r, c, seed):
    g = np.random.default_rng(seed)
    M = g.standard_normal((r, c)) + 1j * g.standard_normal((r, c))
    np.testing.assert_array_equal(merge_complex(*split_complex(M)), M)
