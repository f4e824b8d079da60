"""Concurrent-learning identifier: features, stack rule, filter, updates."""

import numpy as np
import pytest

from kernelcritic.dynamics import tracking_benchmark
from kernelcritic.sysid import (DerivativeFilter, HistoryStack,
                                LinearDriftModel, SysIdGains, THETA_TRUE,
                                features_benchmark, identifier_rhs,
                                identifier_step, stack_insert)


def test_features_values():
    np.testing.assert_array_equal(features_benchmark(np.zeros(2)), np.zeros(3))
    np.testing.assert_allclose(features_benchmark(np.array([0.0, 1.0])),
                               [0.0, 1.0, 3.0], atol=1e-15)


def test_true_parameters_reproduce_drift():
    problem = tracking_benchmark()
    rng = np.random.Generator(np.random.Philox(9))
    for _ in range(100):
        x = rng.uniform(-2.0, 2.0, size=2)
        np.testing.assert_allclose(THETA_TRUE.T @ features_benchmark(x),
                                   problem.plant.drift(x), rtol=0, atol=1e-12)


def _gains():
    return SysIdGains(k=500.0, k_theta=20.0, gamma_theta=np.eye(3))


def test_identifier_fixed_point():
    # exact parameters, exact observer, noiseless stack: no update
    problem = tracking_benchmark()
    model = LinearDriftModel(p=3, features=features_benchmark,
                             theta_hat=THETA_TRUE.copy())
    g_fn = problem.plant.effectiveness
    stack = HistoryStack(10, features_benchmark)
    rng = np.random.Generator(np.random.Philox(2))
    for _ in range(10):
        x = rng.uniform(-1.0, 1.0, size=2)
        u = rng.uniform(-1.0, 1.0, size=1)
        xdot = problem.plant.drift(x) + g_fn(x) @ u
        stack_insert(stack, (x, u, xdot))
    x = np.array([0.4, -0.3])
    u = np.array([0.2])
    _, theta_dot = identifier_rhs(model, g_fn, _gains(), x, x, u,
                                  stack_sums=stack.sums(g_fn))
    np.testing.assert_allclose(theta_dot, 0.0, atol=1e-12)


def test_identifier_empty_stack_no_observer_error():
    problem = tracking_benchmark()
    model = LinearDriftModel(p=3, features=features_benchmark,
                             theta_hat=np.zeros((3, 2)))
    x = np.array([0.4, -0.3])
    _, theta_dot = identifier_rhs(model, problem.plant.effectiveness, _gains(),
                                  x, x, np.array([0.2]), stack_sums=None)
    np.testing.assert_array_equal(theta_dot, np.zeros((3, 2)))


def test_identifier_single_entry_frozen():
    # hand-evaluated residual and stacked update for one recorded triple
    problem = tracking_benchmark()
    theta = np.array([[0.1, -0.2], [0.3, 0.0], [-0.1, 0.4]])
    model = LinearDriftModel(p=3, features=features_benchmark, theta_hat=theta)
    stack = HistoryStack(10, features_benchmark)
    xj, uj, xdotj = np.array([0.5, -1.0]), np.array([0.25]), np.array([0.3, -0.7])
    stack_insert(stack, (xj, uj, xdotj))
    x = np.array([0.5, -1.0])
    _, theta_dot = identifier_rhs(model, problem.plant.effectiveness, _gains(),
                                  x, x, uj, stack_sums=stack.sums(
                                      problem.plant.effectiveness))
    expect = 20.0 * np.outer(
        features_benchmark(xj),
        [0.295969769413186, -0.21895465411977866])
    np.testing.assert_allclose(theta_dot, expect, rtol=1e-12, atol=1e-12)


def test_stack_inserts_below_capacity():
    stack = HistoryStack(3, features_benchmark)
    assert stack_insert(stack, (np.array([1.0, 0.0]), np.array([0.0]),
                                np.zeros(2)))
    assert len(stack) == 1
    assert stack.min_singular_value >= 0.0


def test_stack_rejects_duplicate_at_capacity():
    stack = HistoryStack(2, features_benchmark)
    a = (np.array([1.0, 0.5]), np.array([0.0]), np.zeros(2))
    b = (np.array([-0.5, 1.0]), np.array([0.0]), np.zeros(2))
    stack_insert(stack, a)
    stack_insert(stack, b)
    s_before = stack.min_singular_value
    assert not stack_insert(stack, a)
    assert stack.min_singular_value == s_before


def test_stack_replacement_matches_brute_force():
    rng = np.random.Generator(np.random.Philox(17))
    stack = HistoryStack(4, features_benchmark)
    candidates = [(rng.uniform(-2, 2, size=2), rng.uniform(-1, 1, size=1),
                   rng.uniform(-1, 1, size=2)) for _ in range(40)]
    sigmas = []
    for cand in candidates:
        feats_before = None if stack._feat is None else stack._feat.copy()
        entries_before = list(stack.entries)
        changed = stack_insert(stack, cand)
        sigmas.append(stack.min_singular_value)
        if feats_before is None or len(entries_before) < stack.capacity:
            assert changed
            continue
        # brute force: best single replacement including "keep as is"
        best = np.linalg.svd(feats_before, compute_uv=False)[-1]
        sig = features_benchmark(cand[0])
        for j in range(stack.capacity):
            trial = feats_before.copy()
            trial[j] = sig
            best = max(best, np.linalg.svd(trial, compute_uv=False)[-1])
        assert stack.min_singular_value == pytest.approx(best, rel=1e-12)
    # the replacement rule never decreases the smallest singular value
    full = sigmas[stack.capacity - 1:]
    assert all(b >= a - 1e-12 for a, b in zip(full, full[1:]))


def test_savgol_differentiates_quartic_exactly():
    filt = DerivativeFilter(order=5, window_length=11)
    dt = 0.001
    t = np.arange(11) * dt
    samples = (t**4)[:, None]
    mid = 5
    deriv = filt.derivative(samples, dt)
    expect = 4.0 * t[mid] ** 3
    assert deriv[0] == pytest.approx(expect, abs=1e-8)


def test_savgol_window_validation():
    with pytest.raises(ValueError):
        DerivativeFilter(order=5, window_length=10)
    with pytest.raises(ValueError):
        DerivativeFilter(order=5, window_length=5)
    filt = DerivativeFilter(order=5, window_length=11)
    with pytest.raises(ValueError):
        filt.derivative(np.zeros((7, 2)), 0.001)


def test_identifier_step_converges_with_informative_stack():
    # parked at the origin the feature vector vanishes, so the recorded
    # stack alone must drive the parameter estimate to the truth
    problem = tracking_benchmark()
    rng = np.random.Generator(np.random.Philox(4))
    model = LinearDriftModel(p=3, features=features_benchmark,
                             theta_hat=np.zeros((3, 2)))
    stack = HistoryStack(10, features_benchmark)
    g_fn = problem.plant.effectiveness
    for _ in range(10):
        x = rng.uniform(-1.0, 1.0, size=2)
        u = rng.uniform(-1.0, 1.0, size=1)
        stack_insert(stack, (x, u, problem.plant.drift(x) + g_fn(x) @ u))
    assert stack.min_singular_value > 0
    x, u = np.zeros(2), np.array([0.0])
    x_hat = np.array([0.1, 0.1])
    errs = []
    for _ in range(12000):
        model, x_hat = identifier_step(model, stack, g_fn, _gains(), x, x_hat,
                                       u, 0.001)
        errs.append(np.max(np.abs(model.theta_hat - THETA_TRUE)))
    assert errs[-1] < 1e-6
    checkpoints = errs[499::500]
    assert all(b <= a for a, b in zip(checkpoints, checkpoints[1:]))


def test_sysid_gains_validation():
    bad = SysIdGains(k=-1.0, k_theta=0.0, gamma_theta=np.zeros((3, 3)))
    msgs = "\n".join(bad.validate())
    assert "k " in msgs or "k must" in msgs
    assert "k_theta" in msgs
    assert "gamma_theta" in msgs
