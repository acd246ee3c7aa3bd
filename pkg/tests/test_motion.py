import math

import numpy as np
import pytest

from peerloc import (FilterConfig, InertialDelta, MotionNoise, Pose,
                     OutOfOrderError, predict)
from peerloc.filtering import init_known


def make_belief(m=100, pose=Pose(0, 0, 0), owner=1):
    return init_known(pose, FilterConfig(m=m, seed=0), owner=owner)


def test_zero_noise_is_exact_translation():
    b = make_belief(m=50)
    delta = InertialDelta(1, 1.0, 1.0, 0.0, 0.1)
    out = predict(b, delta, MotionNoise(), np.random.default_rng(0))
    assert np.all(out.poses[:, 0] == 1.0)
    assert np.all(out.poses[:, 1] == 0.0)
    assert np.all(out.poses[:, 2] == 0.1)
    assert out.last_update == 1.0


def test_zero_displacement_is_noop_even_with_noise():
    # proportional noise scales with the displacement, so zero motion stays put
    b = make_belief(m=64, pose=Pose(3, -2, 0.4))
    delta = InertialDelta(1, 5.0, 0.0, 0.0, 0.0)
    out = predict(b, delta, MotionNoise(0.5, 0.5), np.random.default_rng(7))
    assert np.array_equal(out.poses, b.poses)
    assert np.array_equal(out.weights, b.weights)


def test_weights_and_count_preserved():
    b = make_belief(m=33)
    delta = InertialDelta(1, 2.0, 0.3, -0.2, 0.05)
    out = predict(b, delta, MotionNoise(0.2, 0.1, 0.01), np.random.default_rng(1))
    assert out.m == 33
    assert np.array_equal(out.weights, b.weights)


def test_monte_carlo_moments():
    # sample statistics of x after predict must match the stated normal law
    m = 10_000
    b = make_belief(m=m)
    delta = InertialDelta(1, 1.0, 1.0, 0.0, 0.0)
    out = predict(b, delta, MotionNoise(sigma_d=0.2), np.random.default_rng(12345))
    xs = out.poses[:, 0]
    assert abs(xs.mean() - 1.0) < 4 * 0.2 / math.sqrt(m)
    assert abs(xs.std(ddof=1) - 0.2) < 0.05 * 0.2
    # y displacement was zero, so no spread there
    assert np.all(out.poses[:, 1] == 0.0)


def test_heading_floor_spreads_heading():
    m = 10_000
    b = make_belief(m=m)
    delta = InertialDelta(1, 1.0, 1.0, 0.0, 0.0)
    out = predict(b, delta, MotionNoise(theta_floor=0.05), np.random.default_rng(5))
    assert abs(out.poses[:, 2].std(ddof=1) - 0.05) < 0.05 * 0.05


def test_same_seed_bit_identical():
    b = make_belief(m=200)
    delta = InertialDelta(1, 1.0, 0.5, 0.2, 0.1)
    noise = MotionNoise(0.2, 0.1, 0.01)
    out1 = predict(b, delta, noise, np.random.default_rng(42))
    out2 = predict(b, delta, noise, np.random.default_rng(42))
    assert np.array_equal(out1.poses, out2.poses)


def test_heading_renormalized():
    b = make_belief(m=10, pose=Pose(0, 0, 3.0))
    delta = InertialDelta(1, 1.0, 0.0, 0.0, 1.0)
    out = predict(b, delta, MotionNoise(), np.random.default_rng(0))
    assert np.all(out.poses[:, 2] >= -math.pi)
    assert np.all(out.poses[:, 2] < math.pi)
    assert out.poses[0, 2] == pytest.approx(3.0 + 1.0 - 2 * math.pi)


def test_stale_timestamp_rejected():
    b = make_belief()
    b.last_update = 10.0
    with pytest.raises(OutOfOrderError):
        predict(b, InertialDelta(1, 9.0, 1, 0, 0), MotionNoise(), np.random.default_rng(0))


def test_wrong_owner_rejected():
    b = make_belief(owner=1)
    with pytest.raises(ValueError):
        predict(b, InertialDelta(2, 1.0, 1, 0, 0), MotionNoise(), np.random.default_rng(0))
