import math

import numpy as np
import pytest

from peerloc import (Belief, DegenerateCorrection, FilterConfig, KdeConfig,
                     NeighborConstraint, Pose, RangingNoise, correct,
                     dual_inject, effective_sample_size, init_known,
                     init_offset, kde_position_density, maybe_resample,
                     systematic_indices, weighted_mean_pose)

CHI2_999_15DF = 37.69729821835383  # frozen from scipy.stats.chi2.ppf(0.999, 15)


def cfg_of(m=500, alpha=0.01, sigma_r=2.0, seed=0, **kw):
    return FilterConfig(m=m, alpha=alpha, ranging=RangingNoise(sigma_r), seed=seed, **kw)


# ------------------------------------------------------------------- init

def test_init_known_uniform():
    b = init_known(Pose(1, 2, 0.3), cfg_of(m=500), owner=4)
    assert b.m == 500
    assert np.all(b.weights == 0.002)
    assert np.all(b.poses == [1.0, 2.0, 0.3])
    assert b.owner == 4
    assert effective_sample_size(b.weights) == pytest.approx(500)
    assert weighted_mean_pose(b) == Pose(1, 2, 0.3)


def test_init_offset_distance_exact():
    rng = np.random.default_rng(3)
    p = Pose(5, 5, 0.1)
    b = init_offset(p, 4.0, cfg_of(m=100), rng)
    mean = weighted_mean_pose(b)
    assert math.hypot(mean.x - p.x, mean.y - p.y) == pytest.approx(4.0, abs=1e-9)
    assert mean.theta == pytest.approx(p.theta)


def test_init_offset_zero_shift_matches_init_known():
    rng = np.random.default_rng(3)
    b = init_offset(Pose(1, 1, 0), 0.0, cfg_of(m=50), rng)
    assert np.all(b.poses == [1.0, 1.0, 0.0])


def test_init_offset_directions_uniform():
    # chi-square over 16 direction bins at the 0.999 level
    p = Pose(0, 0, 0)
    cfg = cfg_of(m=1)
    rng = np.random.default_rng(919)
    n = 10_000
    bins = np.zeros(16, dtype=int)
    for _ in range(n):
        b = init_offset(p, 1.0, cfg, rng)
        ang = math.atan2(b.poses[0, 1], b.poses[0, 0]) % (2 * math.pi)
        bins[int(ang / (2 * math.pi) * 16)] += 1
    expected = n / 16
    stat = ((bins - expected) ** 2 / expected).sum()
    assert stat < CHI2_999_15DF


# ---------------------------------------------------------------- correct

def test_correct_equidistant_keeps_weights():
    b = init_known(Pose(0, 0, 0), cfg_of(m=20))
    # every particle is at the same spot, so likelihoods are constant
    out = correct(b, [NeighborConstraint(5.0, Pose(3, 4, 0), 2)], RangingNoise(2.0))
    assert np.allclose(out.weights, b.weights)
    assert out.poses is b.poses  # poses never copied, never changed


def test_correct_weight_ratio():
    # particles at distance 5 and 7 from the neighbor, z=5, sigma=2:
    # the ratio must be exp((7-5)^2 / (2*4)) = e^0.5
    poses = np.array([[5.0, 0.0, 0.0], [7.0, 0.0, 0.0]])
    b = Belief(poses, np.array([0.5, 0.5]), owner=0)
    out = correct(b, [NeighborConstraint(5.0, Pose(0, 0, 0), 1)], RangingNoise(2.0))
    assert out.weights[0] / out.weights[1] == pytest.approx(1.6487212707001282, rel=1e-9)
    assert out.weights.sum() == pytest.approx(1.0, abs=1e-9)


def test_correct_empty_constraints_is_identity():
    b = init_known(Pose(0, 0, 0), cfg_of(m=10))
    assert correct(b, [], RangingNoise(2.0)) is b


def test_correct_multiple_constraints_accumulate():
    rng = np.random.default_rng(5)
    poses = np.column_stack([rng.uniform(-5, 5, (30, 2)), np.zeros(30)])
    w = rng.uniform(0.1, 1, 30)
    b = Belief(poses, w / w.sum(), owner=0)
    cs = [NeighborConstraint(4.0, Pose(1, 1, 0), 1),
          NeighborConstraint(2.5, Pose(-2, 3, 0), 2)]
    once = correct(b, cs, RangingNoise(1.0))
    stepwise = correct(correct(b, cs[:1], RangingNoise(1.0)), cs[1:], RangingNoise(1.0))
    assert np.allclose(once.weights, stepwise.weights, rtol=1e-12)


def test_correct_degenerate_raises():
    b = init_known(Pose(0, 0, 0), cfg_of(m=5))
    with pytest.raises(DegenerateCorrection):
        correct(b, [NeighborConstraint(100.0, Pose(0, 0, 0), 1)], RangingNoise(0.01))


# --------------------------------------------------------------- resample

def test_systematic_replication_bounds():
    # a particle of weight w appears floor(m*w) or ceil(m*w) times
    weights = np.array([0.5, 0.3, 0.2] + [0.0] * 7)
    m = len(weights)
    for offset in np.linspace(1e-6, 1 / m - 1e-6, 1000):
        counts = np.bincount(systematic_indices(weights, offset), minlength=m)
        for k, w in enumerate(weights):
            assert math.floor(m * w) <= counts[k] <= math.ceil(m * w)


def test_systematic_replication_bounds_random_vectors():
    rng = np.random.default_rng(11)
    for _ in range(200):
        m = int(rng.integers(2, 40))
        w = rng.uniform(0, 1, m)
        w /= w.sum()
        offset = rng.uniform(0, 1 / m)
        counts = np.bincount(systematic_indices(w, offset), minlength=m)
        assert counts.sum() == m
        for k in range(m):
            assert math.floor(m * w[k]) <= counts[k] <= math.ceil(m * w[k])


def test_maybe_resample_skips_above_threshold():
    b = init_known(Pose(0, 0, 0), cfg_of(m=100))
    assert maybe_resample(b, cfg_of(m=100), np.random.default_rng(0)) is b


def test_maybe_resample_one_hot():
    poses = np.arange(30.0).reshape(10, 3)
    w = np.zeros(10)
    w[7] = 1.0
    b = Belief(poses, w, owner=0)
    out = maybe_resample(b, cfg_of(m=10), np.random.default_rng(0))
    assert np.all(out.poses == poses[7])
    assert np.all(out.weights == 0.1)


def test_maybe_resample_preserves_mean_statistically():
    rng = np.random.default_rng(21)
    poses = np.column_stack([rng.normal(0, 2, (200, 2)), rng.uniform(-1, 1, 200)])
    w = rng.uniform(0, 1, 200) ** 3
    w /= w.sum()
    b = Belief(poses, w, owner=0)
    target = weighted_mean_pose(b)
    cfg = cfg_of(m=200, ess_fraction=1.0)  # force a resample every call
    means = []
    for seed in range(1000):
        out = maybe_resample(b, cfg, np.random.default_rng(seed))
        mean = weighted_mean_pose(out)
        means.append((mean.x, mean.y))
    means = np.array(means)
    for axis, expected in enumerate((target.x, target.y)):
        se = means[:, axis].std(ddof=1) / math.sqrt(len(means))
        assert abs(means[:, axis].mean() - expected) < 3 * se


def test_resample_triggers_below_threshold():
    rng = np.random.default_rng(2)
    poses = rng.uniform(0, 1, (50, 3))
    w = np.zeros(50)
    w[:5] = 0.2  # ESS = 5 < 25
    b = Belief(poses, w, owner=0)
    out = maybe_resample(b, cfg_of(m=50), np.random.default_rng(1))
    assert np.all(out.weights == 0.02)
    assert set(map(tuple, out.poses)) <= set(map(tuple, poses[:5]))


# -------------------------------------------------------------------- kde

def brute_force_kde(positions, weights, queries, hx, hy):
    w = weights / weights.sum()
    out = []
    for q in queries:
        total = 0.0
        for p, wk in zip(positions, w):
            total += wk * math.exp(-0.5 * (((q[0] - p[0]) / hx) ** 2
                                           + ((q[1] - p[1]) / hy) ** 2))
        out.append(total / (2 * math.pi * hx * hy))
    return np.array(out)


def test_kde_fixed_matches_brute_force():
    rng = np.random.default_rng(31)
    positions = rng.normal(0, 1, (40, 2))
    weights = rng.uniform(0.1, 1, 40)
    weights /= weights.sum()
    queries = rng.normal(0, 1.5, (7, 2))
    got = kde_position_density(positions, weights, queries, KdeConfig("fixed", 0.8))
    assert np.allclose(got, brute_force_kde(positions, weights, queries, 0.8, 0.8),
                       rtol=1e-12)


def test_kde_single_point_analytic():
    positions = np.zeros((1, 2))
    weights = np.ones(1)
    got = kde_position_density(positions, weights, np.zeros((1, 2)), KdeConfig("fixed", 1.0))
    assert got[0] == pytest.approx(1.0 / (2 * math.pi))


def test_kde_scott_matches_independent_bandwidth():
    rng = np.random.default_rng(32)
    positions = rng.normal(0, 2, (500, 2))
    weights = rng.uniform(0.5, 1, 500)
    weights /= weights.sum()
    neff = 1.0 / float(weights @ weights)
    mean = weights @ positions
    var = weights @ (positions - mean) ** 2
    factor = neff ** (-1 / 6)
    hx, hy = math.sqrt(var[0]) * factor, math.sqrt(var[1]) * factor
    queries = rng.normal(0, 2, (5, 2))
    got = kde_position_density(positions, weights, queries, KdeConfig("scott"))
    assert np.allclose(got, brute_force_kde(positions, weights, queries, hx, hy),
                       rtol=1e-10)


def test_kde_config_validation():
    from peerloc import ConfigError
    with pytest.raises(ConfigError):
        KdeConfig("fixed", 0.0)
    with pytest.raises(ConfigError):
        KdeConfig("adaptive")


# ----------------------------------------------------------- dual inject

def test_dual_inject_alpha_zero_is_identity():
    b = init_known(Pose(0, 0, 0), cfg_of(m=100))
    cs = [NeighborConstraint(5.0, Pose(1, 1, 0), 1)]
    out = dual_inject(b, cs, cfg_of(m=100, alpha=0.0), KdeConfig(), np.random.default_rng(0))
    assert out is b


def test_dual_inject_rounds_half_to_even():
    b = init_known(Pose(0, 0, 0), cfg_of(m=50))
    cs = [NeighborConstraint(5.0, Pose(1, 1, 0), 1)]
    out = dual_inject(b, cs, cfg_of(m=50, alpha=0.01), KdeConfig(), np.random.default_rng(0))
    assert out is b  # round(0.5) == 0


def test_dual_inject_count_500_at_001():
    # cloud far from the neighbor so injected samples are identifiable
    b = init_known(Pose(100, 100, 0), cfg_of(m=500))
    cs = [NeighborConstraint(5.0, Pose(0, 0, 0), 1)]
    out = dual_inject(b, cs, cfg_of(m=500, alpha=0.01), KdeConfig(), np.random.default_rng(0))
    assert out.m == 500
    dist_from_origin = np.linalg.norm(out.poses[:, :2], axis=1)
    injected = dist_from_origin < 50
    assert injected.sum() == 5
    assert out.weights.sum() == pytest.approx(1.0, abs=1e-9)


def test_dual_inject_annulus_radius():
    b = init_known(Pose(0, 0, 0), cfg_of(m=400))
    cs = [NeighborConstraint(5.0, Pose(0, 0, 0), 1)]
    cfg = cfg_of(m=400, alpha=1.0, sigma_r=0.01)
    out = dual_inject(b, cs, cfg, KdeConfig(), np.random.default_rng(9))
    radii = np.linalg.norm(out.poses[:, :2], axis=1)
    assert np.all(radii >= 4.9) and np.all(radii <= 5.1)
    # headings are fresh uniform draws in [-pi, pi)
    assert np.all(out.poses[:, 2] >= -math.pi) and np.all(out.poses[:, 2] < math.pi)
    assert out.poses[:, 2].std() > 0.5


def test_dual_inject_mixture_mass():
    # injected samples carry exactly alpha of the weight mass
    rng = np.random.default_rng(41)
    poses = np.column_stack([rng.normal(0, 0.5, (200, 2)), np.zeros(200)])
    w = rng.uniform(0.5, 1, 200)
    b = Belief(poses, w / w.sum(), owner=0)
    cs = [NeighborConstraint(30.0, Pose(0, 0, 0), 1)]
    cfg = cfg_of(m=200, alpha=0.1)
    out = dual_inject(b, cs, cfg, KdeConfig(), np.random.default_rng(2))
    injected = np.linalg.norm(out.poses[:, :2], axis=1) > 10
    assert injected.sum() == 20
    assert out.weights[injected].sum() == pytest.approx(0.1, abs=1e-9)
    assert out.weights.sum() == pytest.approx(1.0, abs=1e-9)


def test_dual_inject_replaces_lowest_weights():
    poses = np.column_stack([np.arange(10.0), np.zeros(10), np.zeros(10)])
    w = np.arange(1.0, 11.0)
    b = Belief(poses, w / w.sum(), owner=0)
    cs = [NeighborConstraint(5.0, Pose(100, 100, 0), 1)]
    cfg = cfg_of(m=10, alpha=0.2)
    out = dual_inject(b, cs, cfg, KdeConfig(), np.random.default_rng(0))
    kept_x = sorted(out.poses[:8, 0])
    assert kept_x == [2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]  # dropped the two lightest


def test_dual_inject_random_replacement_runs():
    b = init_known(Pose(0, 0, 0), cfg_of(m=100))
    cs = [NeighborConstraint(5.0, Pose(1, 0, 0), 1)]
    cfg = cfg_of(m=100, alpha=0.1, dual_replacement="random")
    out = dual_inject(b, cs, cfg, KdeConfig(), np.random.default_rng(3))
    assert out.m == 100
    assert out.weights.sum() == pytest.approx(1.0, abs=1e-9)


def test_dual_inject_full_replacement():
    b = init_known(Pose(50, 50, 0), cfg_of(m=64))
    cs = [NeighborConstraint(3.0, Pose(0, 0, 0), 1)]
    out = dual_inject(b, cs, cfg_of(m=64, alpha=1.0), KdeConfig(), np.random.default_rng(4))
    assert out.m == 64
    assert np.all(np.linalg.norm(out.poses[:, :2], axis=1) < 20)
    assert out.weights.sum() == pytest.approx(1.0, abs=1e-9)


def test_dual_inject_requires_constraints():
    b = init_known(Pose(0, 0, 0), cfg_of(m=10))
    with pytest.raises(ValueError):
        dual_inject(b, [], cfg_of(m=10), KdeConfig(), np.random.default_rng(0))
