import numpy as np
import pytest
from hypothesis import given, strategies as st

from ringswarm.vecgeo import clip, crossz, rot90, sgnz

finite = st.floats(-1e6, 1e6, allow_nan=False)
vec = st.tuples(finite, finite)


def test_clip_examples():
    np.testing.assert_array_equal(clip((3, 4), 10), [3, 4])
    np.testing.assert_allclose(clip((3, 4), 1), [0.6, 0.8], rtol=0, atol=1e-15)
    np.testing.assert_array_equal(clip((0, 0), 0.6), [0, 0])
    np.testing.assert_array_equal(clip((0, 0), 0), [0, 0])


def test_clip_boundary_uses_scaling_branch():
    # |x| == a is not "< a", so the scaled branch runs and returns x itself
    np.testing.assert_allclose(clip((3, 4), 5), [3, 4])


def test_clip_rejects_negative_bound():
    with pytest.raises(ValueError):
        clip((1, 0), -1)


@pytest.mark.parametrize("x, expected", [((1, 0), (0, 1)), ((0, 1), (-1, 0)), ((2, 3), (-3, 2))])
def test_rot90(x, expected):
    np.testing.assert_array_equal(rot90(x), expected)


@pytest.mark.parametrize("a, b, expected", [((1, 0), (0, 1), 1), ((1, 0), (2, 0), 0),
                                            ((2, 1), (3, 4), 5)])
def test_crossz(a, b, expected):
    assert crossz(a, b) == expected


@pytest.mark.parametrize("x, expected", [(0, 1), (0.0, 1), (-3, -1), (0.0001, 1)])
def test_sgnz(x, expected):
    assert sgnz(x) == expected


@given(vec, st.floats(0, 1e6))
def test_clip_never_exceeds_bound(x, a):
    out = clip(x, a)
    assert np.hypot(*out) <= a * (1 + 1e-15) + 1e-300


@given(vec, st.floats(0, 1e6))
def test_clip_preserves_direction(x, a):
    x = np.array(x)
    out = clip(x, a)
    if np.hypot(*x) > 0:
        assert crossz(out, x) == pytest.approx(0, abs=1e-9 * max(1, np.hypot(*x) * max(a, 1)))
        assert np.dot(out, x) >= 0


@given(vec)
def test_rot90_twice_negates(x):
    np.testing.assert_allclose(rot90(rot90(x)), -np.array(x), atol=1e-12)


@given(vec)
def test_rot90_is_orthogonal_and_isometric(x):
    y = rot90(x)
    assert abs(np.dot(x, y)) <= 1e-15 * np.dot(x, x)
    assert np.hypot(*y) == np.hypot(*x)


@given(vec, vec)
def test_crossz_antisymmetric(a, b):
    assert crossz(a, b) == -crossz(b, a)
