import math

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from cugan.curriculum import (
    CurriculumConfig,
    active_pool,
    batch_weights,
    default_stage_cuts,
    draw_indices,
    easiness_weight,
    plan_for_iteration,
    pool_size,
    sample_probabilities,
)
from cugan.difficulty import rank_by_difficulty
from cugan.errors import ConfigError, DegenerateDistributionError

scores_st = st.lists(st.floats(min_value=-1, max_value=1), min_size=1, max_size=64)


def cfg(strategy="sampling", **kw):
    kw.setdefault("total_iterations", 80000)
    return CurriculumConfig(strategy=strategy, **kw)


# -- easiness weights ----------------------------------------------------------


def test_easiness_weight_endpoints():
    assert easiness_weight(1.0, 0, 1.0, 5e-5) == 0.0
    assert easiness_weight(-1.0, 0, 1.0, 5e-5) == 2.0


@pytest.mark.parametrize("t,k", [(0, 1.0), (123, 4.0), (10**6, 0.3)])
def test_easiness_weight_zero_score(t, k):
    assert easiness_weight(0.0, t, k, 5e-5) == 1.0


def test_easiness_weight_high_precision():
    mpmath.mp.dps = 40
    expected = float(1 - mpmath.exp(-mpmath.mpf("5e-5") * 20000))
    assert easiness_weight(1.0, 20000, 1.0, 5e-5) == pytest.approx(expected, abs=1e-15)
    assert expected == pytest.approx(0.6321206, abs=1e-7)


@given(st.floats(-1, 1), st.integers(0, 10**6), st.floats(0.01, 4), st.floats(1e-6, 1e-2))
def test_weight_convergence_bound(s, t, k, gamma):
    w = easiness_weight(s, t, k, gamma)
    decay = math.exp(-gamma * t)
    assert abs(abs(w - 1) - k * abs(s) * decay) <= 1e-12
    assert abs(w - 1) <= k * decay + 1e-12


@given(st.floats(-1, 1), st.floats(0.01, 1.0), st.integers(0, 10**5))
def test_weight_range_for_small_k(s, k, t):
    w = easiness_weight(s, t, k, 5e-5)
    assert 1 - k - 1e-12 <= w <= 1 + k + 1e-12


def test_batch_weights_examples():
    c = cfg("weighting", k=2.0)
    np.testing.assert_array_equal(batch_weights([-1.0, 0.0, 1.0], 0, c), [3.0, 1.0, -1.0])
    np.testing.assert_array_equal(batch_weights([0.5], 0, cfg("weighting", k=1.0)), [0.5])
    far = batch_weights([-1.0, -0.3, 0.7, 1.0], 10**7, cfg("weighting", k=4.0))
    np.testing.assert_allclose(far, 1.0, atol=1e-12)


# -- sampling distribution -----------------------------------------------------


def test_sampling_k4_shift():
    np.testing.assert_array_equal(sample_probabilities([1.0, -1.0], 0, cfg(k=4.0)), [0.0, 1.0])


def test_sampling_hand_normalization():
    # k=1, t=0: w = 1 - s, so s = {0.5, 0, -0.5} gives weights {0.5, 1, 1.5}
    p = sample_probabilities([0.5, 0.0, -0.5], 0, cfg(k=1.0))
    np.testing.assert_allclose(p, [1 / 6, 1 / 3, 1 / 2], rtol=0, atol=1e-15)


def test_sampling_uniform_limit():
    p = sample_probabilities([-1.0, -0.2, 0.4, 1.0], 10**7, cfg(k=2.0, gamma=5e-5))
    np.testing.assert_allclose(p, 0.25, atol=1e-12)


def test_sampling_degenerate():
    # only reachable through hand-built scores: normalized scores are never all +1
    # the shifted weight k - k*s*exp(-gamma*t) is 0 at s=1, t=0 for every k >= 1
    for k in (1.0, 2.0, 4.0):
        with pytest.raises(DegenerateDistributionError, match="uniform baseline"):
            sample_probabilities([1.0, 1.0], 0, cfg(k=k))
        np.testing.assert_allclose(sample_probabilities([1.0, 1.0], 1, cfg(k=k)), [0.5, 0.5])
    np.testing.assert_allclose(sample_probabilities([1.0, 1.0], 0, cfg(k=0.5)), [0.5, 0.5])


@given(scores_st, st.integers(0, 10**6), st.sampled_from([0.5, 1.0, 2.0, 4.0]))
def test_sampling_is_distribution(s, t, k):
    s = np.asarray(s)
    c = cfg(k=k)
    w = batch_weights(s, t, c) + max(0.0, k - 1)
    assume(w.max() > 0)
    p = sample_probabilities(s, t, c)
    assert np.all(p >= 0)
    assert abs(p.sum() - 1) <= 1e-12


@given(scores_st, st.integers(0, 10**5), st.floats(0.01, 100.0))
def test_sampling_scale_invariance(s, t, scale):
    # p is the shifted weight vector divided by its sum, so rescaling it changes nothing
    c = cfg(k=4.0)
    shifted = batch_weights(s, t, c) + 3.0
    assume(shifted.sum() > 0)
    p = sample_probabilities(s, t, c)
    scaled = scale * shifted
    np.testing.assert_allclose(scaled / scaled.sum(), p, atol=1e-12, rtol=0)


def test_sampling_converges_monotonically(rng):
    s = rng.uniform(-1, 1, 32)
    for k in (1.0, 2.0, 4.0):
        c = cfg(k=k, gamma=5e-5)
        ts = np.linspace(0, 10 / c.gamma, 50)
        dev = [np.abs(sample_probabilities(s, t, c) - 1 / 32).max() for t in ts]
        assert all(b <= a + 1e-15 for a, b in zip(dev, dev[1:]))
        assert dev[-1] < 1e-4


# -- drawing -------------------------------------------------------------------


def test_draw_point_mass(rng):
    assert np.all(draw_indices([0.0, 1.0], 500, rng) == 1)
    assert np.all(draw_indices([1.0, 0.0, 0.0], 500, rng) == 0)


def test_draw_deterministic():
    p = [0.2, 0.3, 0.5]
    a = draw_indices(p, 100, np.random.default_rng(3))
    b = draw_indices(p, 100, np.random.default_rng(3))
    np.testing.assert_array_equal(a, b)


def _within_3se(idx, p, draws):
    p = np.asarray(p)
    freq = np.bincount(idx, minlength=p.size) / draws
    se = np.sqrt(p * (1 - p) / draws)
    return np.all(np.abs(freq - p) <= 3 * se)


def test_draw_uniform_frequencies(rng):
    draws = 100_000
    p = np.full(10, 0.1)
    assert _within_3se(draw_indices(p, draws, rng), p, draws)


def test_draw_nonuniform_frequencies(rng):
    draws = 60_000
    p = [1 / 6, 1 / 3, 1 / 2]
    assert _within_3se(draw_indices(p, draws, rng), p, draws)


# -- batch pools -----------------------------------------------------------------


def test_default_cuts_scale_reference():
    assert default_stage_cuts(80000) == [15000, 25000]
    assert default_stage_cuts(2000) == [375, 625]
    assert default_stage_cuts(100, m=1) == []


def test_pool_examples():
    n = 30
    c = cfg("batches", m=3, stage_cuts=[15000, 25000])
    ranking = np.arange(n)[::-1]
    assert active_pool(0, c, ranking).tolist() == ranking[:10].tolist()
    assert active_pool(14999, c, ranking).size == 10
    assert active_pool(15000, c, ranking).size == 20
    assert active_pool(25000, c, ranking).size == n
    one = cfg("batches", m=1)
    assert all(active_pool(t, one, ranking).size == n for t in (0, 40000, 79999))


def test_pool_sizes_uneven():
    c = cfg("batches", m=3, stage_cuts=[10, 20], total_iterations=30)
    assert [pool_size(t, c, 10) for t in (0, 10, 20)] == [4, 7, 10]


@given(st.integers(1, 200), st.integers(1, 6), st.lists(st.integers(0, 999), min_size=2, max_size=2))
def test_pools_cumulative(n, m, ts):
    cuts = sorted({int(x) for x in np.linspace(100, 900, m + 1)[1:-1]}) if m > 1 else []
    if len(cuts) != m - 1:
        return
    c = cfg("batches", m=m, stage_cuts=cuts, total_iterations=1000)
    ranking = np.random.default_rng(n).permutation(n)
    t1, t2 = sorted(ts)
    p1, p2 = active_pool(t1, c, ranking), active_pool(t2, c, ranking)
    assert set(p1) <= set(p2)
    np.testing.assert_array_equal(p2[: p1.size], p1)


# -- plans ---------------------------------------------------------------------


def test_plan_none_is_uniform(rng):
    s = rng.uniform(-1, 1, 20)
    plan = plan_for_iteration(0, cfg("none"), s)
    np.testing.assert_array_equal(plan.weights, 1.0)
    np.testing.assert_allclose(plan.implied_probabilities(), 1 / 20)


def test_plan_sampling_late_matches_uniform(rng):
    s = rng.uniform(-1, 1, 50)
    c = cfg("sampling", k=4.0, gamma=5e-5)
    plan = plan_for_iteration(int(20 / c.gamma), c, s)
    np.testing.assert_allclose(plan.implied_probabilities(), 1 / 50, atol=1e-6, rtol=0)
    np.testing.assert_array_equal(plan.weights, 1.0)


def test_plan_weighting_late_matches_unit(rng):
    s = rng.uniform(-1, 1, 50)
    c = cfg("weighting", k=2.0, gamma=5e-5)
    plan = plan_for_iteration(int(20 / c.gamma), c, s)
    np.testing.assert_allclose(plan.weights, 1.0, atol=1e-6, rtol=0)
    np.testing.assert_allclose(plan.implied_probabilities(), 1 / 50)


def test_plan_batches_is_step_function(rng):
    n = 30
    s = rng.uniform(-1, 1, n)
    c = cfg("batches", m=3, stage_cuts=[100, 200], total_iterations=300)
    ranking = rank_by_difficulty(s)
    for t, size in ((0, 10), (150, 20), (250, 30)):
        p = plan_for_iteration(t, c, s, ranking).implied_probabilities()
        ranked = p[ranking]
        np.testing.assert_allclose(ranked[:size], 1 / size)
        np.testing.assert_array_equal(ranked[size:], 0.0)
    easiest = set(ranking[:10].tolist())
    assert set(plan_for_iteration(0, c, s).eligible.tolist()) == easiest


# -- config validation ---------------------------------------------------------------


@pytest.mark.parametrize("kw", [
    dict(strategy="bogus"), dict(k=0.0), dict(k=-1.0), dict(gamma=0.0), dict(m=0),
    dict(weighting_mode="sideways"), dict(m=3, stage_cuts=[5]), dict(m=3, stage_cuts=[20, 10]),
    dict(m=3, stage_cuts=[10, 100], total_iterations=100),
])
def test_config_validation(kw):
    kw.setdefault("total_iterations", 1000)
    with pytest.raises(ConfigError):
        CurriculumConfig(**kw)


def test_draw_goodness_of_fit():
    # complements the per-index 3-SE check with a single test over all indices
    from scipy import stats

    rng = np.random.default_rng(77)
    s = rng.uniform(-1, 1, 32)
    for k in (1.0, 2.0, 4.0):
        p = sample_probabilities(s, 0, cfg(k=k, gamma=5e-5))
        counts = np.bincount(draw_indices(p, 200_000, rng), minlength=32)
        live = p > 0
        assert counts[~live].sum() == 0
        _, pvalue = stats.chisquare(counts[live], 200_000 * p[live])
        assert pvalue > 1e-3
        # Bonferroni over 32 indices at family-wise 0.3%: z = 4.17
        se = np.sqrt(p * (1 - p) / 200_000)
        assert np.all(np.abs(counts / 200_000 - p) <= 4.17 * se)
