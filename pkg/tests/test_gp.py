import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adaptive_sampling.gp import (
    NOISE_FLOOR,
    GpModel,
    Hyperparams,
    TrainingSet,
    fit,
    gram,
    kernel_eval,
    log_marginal_likelihood,
    predict,
)
from oracles import naive_lml, naive_posterior, se_kernel


def random_problem(rng, n, dup=False):
    q = rng.uniform(0, 10, (n, 2))
    if dup:
        q[n // 2:] = q[: n - n // 2]
    z = rng.normal(-60, 8, n)
    h = Hyperparams(*np.exp(rng.uniform([0, -0.5, -3], [4, 1.5, 1])))
    return TrainingSet(q, z), h


# kernel and Gram matrix


def test_kernel_zero_distance_is_signal_variance():
    assert kernel_eval((2, 3), (2, 3), Hyperparams(1.0, 0.7)) == 1.0


def test_kernel_closed_form():
    # exp(-1), value taken from an independent calculator
    assert kernel_eval((0, 0), (1, 1), Hyperparams(1.0, 1.0)) == pytest.approx(0.36787944117144233, abs=1e-12)


def test_kernel_decays_to_zero():
    assert kernel_eval((0, 0), (1e3, 0), Hyperparams(5.0, 1.0)) == 0.0


@given(st.tuples(st.floats(-20, 20), st.floats(-20, 20)), st.tuples(st.floats(-20, 20), st.floats(-20, 20)),
       st.floats(0.1, 10), st.floats(0.1, 10))
def test_kernel_symmetric(a, b, sf2, ell):
    h = Hyperparams(sf2, ell)
    assert kernel_eval(a, b, h) == kernel_eval(b, a, h)


def test_gram_single_point():
    np.testing.assert_array_equal(gram([(1, 1)], Hyperparams(2.0, 1.0, 0.5)), [[2.5]])


def test_gram_identical_points():
    G = gram([(1, 2), (1, 2)], Hyperparams(3.0, 1.0, 0.25))
    np.testing.assert_array_equal(G, [[3.25, 3.0], [3.0, 3.25]])


def test_gram_random_points_positive_definite():
    rng = np.random.default_rng(7)
    G = gram(rng.uniform(0, 10, (5, 2)), Hyperparams(1.0, 2.0, 1e-3))
    assert np.linalg.eigvalsh(G).min() >= 0
    np.linalg.cholesky(G)
    np.testing.assert_array_equal(G, G.T)


def test_gram_needs_points():
    with pytest.raises(ValueError):
        gram(np.empty((0, 2)), Hyperparams(1.0, 1.0))


def test_hyperparams_validation():
    with pytest.raises(ValueError):
        Hyperparams(0.0, 1.0)
    with pytest.raises(ValueError):
        Hyperparams(1.0, -1.0)
    with pytest.raises(ValueError):
        Hyperparams(1.0, 1.0, -1e-3)
    h = Hyperparams(2.0, 3.0, 0.5)
    np.testing.assert_allclose(Hyperparams.from_log(h.to_log()).to_log(), h.to_log())


def test_training_set_shapes():
    with pytest.raises(ValueError):
        TrainingSet([[0, 0], [1, 1]], [1.0])
    t = TrainingSet().extend((1, 2), 3.0).extend([(0, 0), (2, 2)], [4.0, 5.0])
    assert len(t) == 3
    assert t.locations.shape == (3, 2)


# log marginal likelihood


def test_lml_single_standard_normal():
    lml, _ = log_marginal_likelihood(TrainingSet([(0, 0)], [0.0]), Hyperparams(0.5, 1.0, 0.5))
    assert lml == pytest.approx(-0.9189385332046727, abs=1e-12)


def test_lml_zero_observations_is_log_determinant_only():
    t = TrainingSet([(0, 0), (1, 0), (0, 2)], [0.0, 0.0, 0.0])
    h = Hyperparams(2.0, 1.3, 0.1)
    lml, _ = log_marginal_likelihood(t, h)
    _, logdet = np.linalg.slogdet(gram(t.locations, h))
    assert lml == pytest.approx(-0.5 * logdet - 1.5 * math.log(2 * math.pi), abs=1e-12)


@pytest.mark.parametrize("dup", [False, True])
def test_lml_matches_naive_formula(dup):
    rng = np.random.default_rng(3)
    for _ in range(10):
        t, h = random_problem(rng, 12, dup)
        lml, _ = log_marginal_likelihood(t, h)
        ref = naive_lml(t.locations, t.observations, h.signal_variance, h.length_scale, h.noise_variance)
        assert lml == pytest.approx(ref, rel=1e-9, abs=1e-9)


def central_difference(t, h, eps=1e-5):
    theta = h.to_log()
    g = np.empty(3)
    for k in range(3):
        up, dn = theta.copy(), theta.copy()
        up[k] += eps
        dn[k] -= eps
        g[k] = (log_marginal_likelihood(t, Hyperparams.from_log(up))[0]
                - log_marginal_likelihood(t, Hyperparams.from_log(dn))[0]) / (2 * eps)
    return g


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.booleans())
def test_lml_gradient_matches_finite_differences(seed, dup):
    t, h = random_problem(np.random.default_rng(seed), 10, dup)
    _, grad = log_marginal_likelihood(t, h)
    fd = central_difference(t, h)
    scale = np.maximum(np.abs(fd), 1.0)
    assert np.all(np.abs(grad - fd) / scale <= 1e-4)


def test_lml_not_positive_definite_is_sentinel():
    # two nearly coincident points, conflicting values, no noise
    lml, grad = log_marginal_likelihood(TrainingSet([(0, 0), (1e-9, 0)], [1.0, 2.0]), Hyperparams(1.0, 1.0, 0.0))
    assert lml == -math.inf
    assert np.all(np.isnan(grad))


# prediction


def test_predict_empty_is_prior():
    m = GpModel.condition(TrainingSet(), Hyperparams(3.0, 1.0))
    p = predict(m, [(0, 0), (5, 5)])
    np.testing.assert_array_equal(p.mean, [0, 0])
    np.testing.assert_array_equal(p.variance, [3, 3])


def test_predict_single_point_closed_form():
    m = GpModel.condition(TrainingSet([(0, 0)], [1.0]), Hyperparams(1.0, 1.0, 0.0), center=False)
    p = predict(m, [(1, 0)])
    assert p.mean[0] == pytest.approx(0.6065306597126334, abs=1e-12)  # exp(-1/2)
    assert p.variance[0] == pytest.approx(0.6321205588285577, abs=1e-12)  # 1 - exp(-1)


def test_predict_at_training_point_reproduces_observation():
    m = GpModel.condition(TrainingSet([(0, 0), (3, 4)], [-50.0, -70.0]), Hyperparams(50.0, 2.0))
    p = predict(m, [(0, 0), (3, 4)])
    np.testing.assert_allclose(p.mean, [-50, -70], atol=1e-6)
    assert p.variance.max() <= 1e-5


def test_predict_matches_naive_posterior_with_replicates():
    rng = np.random.default_rng(11)
    t, h = random_problem(rng, 14, dup=True)
    Q = rng.uniform(0, 10, (30, 2))
    p = predict(GpModel.condition(t, h), Q)
    mean, var = naive_posterior(t.locations, t.observations, Q, h.signal_variance, h.length_scale,
                                h.noise_variance, offset=t.observations.mean())
    np.testing.assert_allclose(p.mean, mean, rtol=1e-8, atol=1e-8)
    np.testing.assert_allclose(p.variance, np.clip(var, 0, None), rtol=1e-7, atol=1e-8)


def distinct_points(draw_seed, n, min_sep=0.8):
    rng = np.random.default_rng(draw_seed)
    pts = []
    while len(pts) < n:
        c = rng.uniform(0, 10, 2)
        if all(np.hypot(*(c - p)) >= min_sep for p in pts):
            pts.append(c)
    return np.array(pts), rng


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 12), st.floats(0.2, 1.0))
def test_interpolation_property(seed, n, ell):
    q, rng = distinct_points(seed, n)
    z = rng.normal(-60, 10, n)
    p = predict(GpModel.condition(TrainingSet(q, z), Hyperparams(100.0, ell, NOISE_FLOOR)), q)
    assert np.max(np.abs(p.mean - z)) <= 1e-5


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 15), st.booleans())
def test_variance_bounded_by_prior(seed, n, dup):
    rng = np.random.default_rng(seed)
    t, h = random_problem(rng, n, dup) if n else (TrainingSet(), Hyperparams(2.0, 1.0))
    p = predict(GpModel.condition(t, h), rng.uniform(-2, 12, (50, 2)))
    assert np.all(p.variance >= 0)
    assert np.all(p.variance <= h.signal_variance + 1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_variance_never_increases_with_data(seed):
    rng = np.random.default_rng(seed)
    t, h = random_problem(rng, 10)
    Q = rng.uniform(0, 10, (40, 2))
    prev = predict(GpModel.condition(TrainingSet(), h), Q).variance
    for k in range(1, 11):
        cur = predict(GpModel.condition(TrainingSet(t.locations[:k], t.observations[:k]), h), Q).variance
        assert np.all(cur <= prev + 1e-9)
        prev = cur


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.booleans())
def test_permutation_invariance(seed, dup):
    rng = np.random.default_rng(seed)
    t, h = random_problem(rng, 12, dup)
    perm = rng.permutation(12)
    Q = rng.uniform(0, 10, (20, 2))
    a = predict(GpModel.condition(t, h), Q)
    b = predict(GpModel.condition(TrainingSet(t.locations[perm], t.observations[perm]), h), Q)
    np.testing.assert_allclose(a.mean, b.mean, rtol=0, atol=1e-10)
    np.testing.assert_allclose(a.variance, b.variance, rtol=0, atol=1e-10)


# fitting


def synthetic_draw(seed, n=50, sf2=4.0, ell=2.0, sn2=0.25):
    rng = np.random.default_rng(seed)
    q = rng.uniform(0, 20, (n, 2))
    C = se_kernel(q, q, sf2, ell) + sn2 * np.eye(n)
    z = np.linalg.cholesky(C) @ rng.standard_normal(n)
    return TrainingSet(q, z)


@pytest.mark.parametrize("seed", range(4))
def test_fit_recovers_length_scale(seed):
    t = synthetic_draw(seed)
    true = Hyperparams(4.0, 2.0, 0.25)
    h = fit(t, Hyperparams(1.0, 1.0, 1.0), restarts=3, seed=seed)
    assert 1.0 <= h.length_scale <= 4.0
    centered = TrainingSet(t.locations, t.observations - t.observations.mean())
    assert log_marginal_likelihood(centered, h)[0] >= log_marginal_likelihood(centered, true)[0] - 1e-6


def test_fit_never_worse_than_init():
    rng = np.random.default_rng(5)
    for _ in range(5):
        t, init = random_problem(rng, 15)
        centered = TrainingSet(t.locations, t.observations - t.observations.mean())
        h = fit(t, init, restarts=1, seed=1, max_length_scale=50.0)
        assert log_marginal_likelihood(centered, h)[0] >= log_marginal_likelihood(centered, init)[0] - 1e-9


def test_fit_constant_field_caps_length_scale():
    t = TrainingSet([(0, 0), (3, 4)], [-40.0, -40.0])
    h = fit(t, Hyperparams(2.0, 1.0, 0.3))
    assert h.length_scale == pytest.approx(5.0)  # bounding-box diagonal
    assert h.noise_variance == NOISE_FLOOR
    assert h.signal_variance == 2.0
    assert fit(t, Hyperparams(2.0, 1.0), max_length_scale=18.0).length_scale == 18.0


def test_fit_without_restarts_is_deterministic():
    t = synthetic_draw(9, n=20)
    init = Hyperparams(1.0, 1.0, 0.5)
    assert fit(t, init, restarts=0, seed=1) == fit(t, init, restarts=0, seed=2)


def test_fit_seeded_restarts_are_reproducible():
    t = synthetic_draw(9, n=20)
    init = Hyperparams(1.0, 1.0, 0.5)
    assert fit(t, init, restarts=3, seed=4) == fit(t, init, restarts=3, seed=4)


def test_fit_respects_bounds():
    t = synthetic_draw(2, n=30)
    h = fit(t, Hyperparams(1.0, 1.0, 1.0), min_length_scale=3.0, max_length_scale=3.5)
    assert 3.0 - 1e-9 <= h.length_scale <= 3.5 + 1e-9
    assert h.noise_variance >= NOISE_FLOOR


def test_fit_needs_two_samples():
    with pytest.raises(ValueError):
        fit(TrainingSet([(0, 0)], [1.0]), Hyperparams(1.0, 1.0))
