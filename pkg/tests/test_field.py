import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ringswarm.core import NeighborView, SwarmParams
from ringswarm.field import AvoidanceRequest, avoid_gyro, avoid_none, avoid_potential


def request(u_des, pos, vel, neighbors, c_r=1.0, l_r=1.0, index=0):
    return AvoidanceRequest(np.array(u_des, float), np.array(pos, float), np.array(vel, float),
                            neighbors, SwarmParams(c_r=c_r, l_r=l_r), index=index)


def potential_energy(p, others, c_r, l_r):
    return sum(c_r * math.exp(-2 * np.linalg.norm(p - q) / l_r) for q in others)


def test_none_is_identity():
    req = request((0.001, 0), (0, 0), (0.1, 0), [((0.1, 0), (0, 0))])
    np.testing.assert_array_equal(avoid_none(req), [0.001, 0])
    np.testing.assert_array_equal(avoid_none(request((0, 0), (0, 0), (0, 0), [])), [0, 0])


def test_potential_no_neighbors():
    np.testing.assert_array_equal(avoid_potential(request((0.3, -0.2), (1, 1), (0, 1), [])),
                                  [0.3, -0.2])


def test_potential_single_neighbor_magnitude():
    out = avoid_potential(request((0, 0), (0.5, 0), (0, 0), [((0, 0), (0, 0))]))
    np.testing.assert_allclose(out, [2 * math.exp(-1), 0], rtol=1e-15)
    assert 2 * math.exp(-1) == pytest.approx(0.7358, abs=1e-4)


def test_potential_symmetric_neighbors_cancel_laterally():
    nb = [((-0.3, 0.4), (0, 0)), ((0.3, 0.4), (0, 0))]
    out = avoid_potential(request((0, 0), (0, 0), (0, 0), nb))
    assert out[0] == pytest.approx(0, abs=1e-16)
    assert out[1] < 0


def test_potential_coincident_uses_index_parity():
    nb = [((1.0, 1.0), (0, 0))]
    even = avoid_potential(request((0, 0), (1, 1), (0, 0), nb, index=2))
    odd = avoid_potential(request((0, 0), (1, 1), (0, 0), nb, index=3))
    np.testing.assert_allclose(even, [2.0, 0.0])
    np.testing.assert_allclose(odd, [-2.0, 0.0])


@settings(max_examples=40)
@given(st.integers(1, 6), st.floats(0.1, 3.0), st.floats(0.0, 2.0), st.integers(0, 2**32 - 1))
def test_potential_is_negative_gradient(k, l_r, c_r, seed):
    rng = np.random.default_rng(seed)
    p = rng.uniform(-1, 1, 2)
    others = rng.uniform(-1, 1, (k, 2))
    nb = [(q, (0, 0)) for q in others]
    out = avoid_potential(request((0, 0), p, (0, 0), nb, c_r=c_r, l_r=l_r))
    h = 1e-6
    grad = np.array([(potential_energy(p + e, others, c_r, l_r)
                      - potential_energy(p - e, others, c_r, l_r)) / (2 * h)
                     for e in (np.array([h, 0]), np.array([0, h]))])
    np.testing.assert_allclose(out, -grad, rtol=1e-6, atol=1e-7)


@given(st.floats(1e-3, 5.0), st.floats(1e-3, 5.0))
def test_potential_magnitude_decreases_with_distance(d1, d2):
    if d1 == d2:
        return
    lo, hi = sorted((d1, d2))
    f = lambda d: np.linalg.norm(avoid_potential(request((0, 0), (d, 0), (0, 0), [((0, 0), (0, 0))])))
    assert f(lo) > f(hi)


def test_potential_zero_caution_equals_none():
    nb = [((0.2, 0.1), (1, 0)), ((-0.4, 0.0), (0, 1))]
    req = request((0.01, 0.02), (0, 0), (0.1, 0), nb, c_r=0.0)
    np.testing.assert_array_equal(avoid_potential(req), avoid_none(req))


def test_gyro_head_on_steers_left():
    out = avoid_gyro(request((0, 0), (0, 0), (0.12, 0), [((1, 0), (-0.12, 0))]))
    assert out[0] == 0 and out[1] > 0
    assert out[1] == pytest.approx(2 * math.exp(-2))


def test_gyro_no_neighbors():
    np.testing.assert_array_equal(avoid_gyro(request((0.1, 0.2), (0, 0), (1, 0), [])), [0.1, 0.2])


def test_gyro_sign_convention():
    # neighbor on the right of the velocity: crossz(r_j - r_i, v) > 0, steer along +rot90(v)
    right = avoid_gyro(request((0, 0), (0, 0), (1, 0), [((0.5, -0.5), (0, 0))]))
    left = avoid_gyro(request((0, 0), (0, 0), (1, 0), [((0.5, 0.5), (0, 0))]))
    d = math.hypot(0.5, 0.5)
    mag = 2 * math.exp(-2 * d)
    np.testing.assert_allclose(right, [0, mag], atol=1e-16)
    np.testing.assert_allclose(left, [0, -mag], atol=1e-16)


def test_gyro_uses_nearest_neighbor_only():
    nb = [((0.9, -0.1), (0, 0)), ((0.2, 0.3), (0, 0))]
    out = avoid_gyro(request((0, 0), (0, 0), (0, 1), nb))
    # nearest is (0.2, 0.3): crossz((0.2,0.3),(0,1)) = 0.2 > 0 -> +rot90((0,1)) = (-1, 0)
    mag = 2 * math.exp(-2 * math.hypot(0.2, 0.3))
    np.testing.assert_allclose(out, [-mag, 0], atol=1e-16)


def test_gyro_at_rest_is_unmodified():
    out = avoid_gyro(request((0.05, 0), (0, 0), (0, 0), [((0.1, 0), (0, 0))]))
    np.testing.assert_array_equal(out, [0.05, 0])


@settings(max_examples=100)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6))
def test_gyro_correction_is_orthogonal_and_matches_potential_magnitude(seed, k):
    rng = np.random.default_rng(seed)
    p = rng.uniform(-1, 1, 2)
    v = rng.normal(size=2)
    u = rng.normal(size=2)
    others = rng.uniform(-1, 1, (k, 2))
    nb = [(q, (0, 0)) for q in others]
    c_r, l_r = rng.uniform(0.1, 1), rng.uniform(0.5, 2)
    corr = avoid_gyro(request(u, p, v, nb, c_r=c_r, l_r=l_r)) - u
    assert abs(corr @ v) < 1e-10 * np.linalg.norm(corr) * np.linalg.norm(v) + 1e-15
    nearest = others[np.argmin(np.linalg.norm(others - p, axis=1))]
    single = avoid_potential(request((0, 0), p, v, [(nearest, (0, 0))], c_r=c_r, l_r=l_r))
    assert np.linalg.norm(corr) == pytest.approx(np.linalg.norm(single), rel=1e-12)


def test_request_accepts_neighbor_view():
    view = NeighborView(np.array([4]), np.array([[0.5, 0.0]]), np.array([[0.0, 0.0]]))
    req = request((0, 0), (0, 0), (0, 0), view)
    np.testing.assert_allclose(avoid_potential(req), [-2 * math.exp(-1), 0])
