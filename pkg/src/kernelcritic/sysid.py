"""Concurrent-learning identifier for a linearly parameterized drift.

An observer tracks the plant state; the parameter estimate is driven by
the observer error plus residuals over a recorded history stack, so the
estimate converges without persistent probing once the stack spans the
feature space.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.signal import savgol_coeffs


def features_benchmark(x):
    """Feature basis of the planar tracking plant: [x1, x2, x2(cos(2x1)+2)]."""
    return np.array([x[0], x[1], x[1] * (np.cos(2.0 * x[0]) + 2.0)])


# true parameters of the tracking benchmark drift, rows match the features
THETA_TRUE = np.array([[-1.0, -0.5], [1.0, 0.0], [0.0, -0.5]])


@dataclass
class LinearDriftModel:
    p: int
    features: Callable[[np.ndarray], np.ndarray]
    theta_hat: np.ndarray  # (p, n)
    theta_true: Optional[np.ndarray] = None

    def drift_estimate(self, x):
        return self.theta_hat.T @ self.features(x)


@dataclass(frozen=True)
class SysIdGains:
    k: float = 500.0
    k_theta: float = 20.0
    gamma_theta: np.ndarray = field(default_factory=lambda: np.eye(3))

    def validate(self):
        bad = []
        if self.k <= 0:
            bad.append(f"k must be > 0 (got {self.k})")
        if self.k_theta <= 0:
            bad.append(f"k_theta must be > 0 (got {self.k_theta})")
        gt = np.asarray(self.gamma_theta)
        if gt.ndim != 2 or gt.shape[0] != gt.shape[1] or np.min(np.linalg.eigvalsh(gt)) <= 0:
            bad.append("gamma_theta must be symmetric positive definite")
        return bad


class HistoryStack:
    """Fixed-capacity store of (x, u, xdot) triples with a
    singular-value-maximizing replacement rule."""

    def __init__(self, capacity, features):
        self.capacity = capacity
        self.features = features
        self.entries = []
        self._feat = None  # (K, p) stacked feature rows

    def __len__(self):
        return len(self.entries)

    @property
    def min_singular_value(self):
        if not self.entries:
            return 0.0
        return float(np.linalg.svd(self._feat, compute_uv=False)[-1])

    def sums(self, g_fn):
        """(sum sig sig^T, sum sig (xdot - g u)^T) over the stack."""
        if not self.entries:
            raise ValueError("empty stack has no sums")
        n = self.entries[0][2].size
        s_sum = self._feat.T @ self._feat
        f_sum = np.zeros((self._feat.shape[1], n))
        for (x, u, xdot), sig in zip(self.entries, self._feat):
            f_sum += np.outer(sig, xdot - g_fn(x) @ u)
        return s_sum, f_sum


def stack_insert(stack, candidate):
    """Insert when below capacity; otherwise replace the entry whose
    replacement most increases the smallest singular value, and only if it
    strictly increases.  Returns True when the stack changed."""
    x, u, xdot = candidate
    sig = stack.features(x)
    if len(stack.entries) < stack.capacity:
        stack.entries.append((np.array(x), np.array(u), np.array(xdot)))
        row = sig[None, :]
        stack._feat = row if stack._feat is None or len(stack.entries) == 1 else np.vstack(
            [stack._feat, row]
        )
        return True
    current = stack.min_singular_value
    best_j, best_s = -1, current
    trial = stack._feat.copy()
    for j in range(len(stack.entries)):
        saved = trial[j].copy()
        trial[j] = sig
        s = float(np.linalg.svd(trial, compute_uv=False)[-1])
        trial[j] = saved
        if s > best_s:
            best_j, best_s = j, s
    if best_j < 0:
        return False
    stack.entries[best_j] = (np.array(x), np.array(u), np.array(xdot))
    stack._feat[best_j] = sig
    return True


@dataclass(frozen=True)
class DerivativeFilter:
    """Least-squares polynomial smoothing differentiator.

    Fits a polynomial of the given order over a centered window and reports
    the fitted first derivative at the window center; exact on polynomials
    up to the order.
    """

    order: int = 5
    window_length: int = 11

    def __post_init__(self):
        if self.window_length % 2 != 1 or self.window_length <= self.order:
            raise ValueError("window_length must be odd and exceed the polynomial order")
        coeffs = savgol_coeffs(self.window_length, self.order, deriv=1, delta=1.0, use="dot")
        object.__setattr__(self, "_coeffs", coeffs)

    def derivative(self, window_samples, dt):
        """First derivative at the center row of an (W, n) sample window."""
        w = np.asarray(window_samples, dtype=float)
        if w.shape[0] != self.window_length:
            raise ValueError(f"expected {self.window_length} rows, got {w.shape[0]}")
        return (self._coeffs @ w) / dt


def identifier_rhs(model, g_fn, gains, x, x_hat, u, stack_sums=None):
    """Time derivatives of the observer state and the parameter estimate."""
    sig = model.features(x)
    err = x - x_hat
    x_hat_dot = model.theta_hat.T @ sig + g_fn(x) @ u + gains.k * err
    theta_dot = gains.gamma_theta @ np.outer(sig, err)
    if stack_sums is not None:
        s_sum, f_sum = stack_sums
        theta_dot = theta_dot + gains.k_theta * (
            gains.gamma_theta @ (f_sum - s_sum @ model.theta_hat)
        )
    return x_hat_dot, theta_dot


def identifier_step(model, stack, g_fn, gains, x, x_hat, u, dt):
    """Advance (x_hat, theta_hat) one fixed step with x, u held constant."""
    sums = stack.sums(g_fn) if len(stack) else None

    def rhs(xh, th):
        m = LinearDriftModel(p=model.p, features=model.features, theta_hat=th)
        return identifier_rhs(m, g_fn, gains, x, xh, u, stack_sums=sums)

    k1x, k1t = rhs(x_hat, model.theta_hat)
    k2x, k2t = rhs(x_hat + 0.5 * dt * k1x, model.theta_hat + 0.5 * dt * k1t)
    k3x, k3t = rhs(x_hat + 0.5 * dt * k2x, model.theta_hat + 0.5 * dt * k2t)
    k4x, k4t = rhs(x_hat + dt * k3x, model.theta_hat + dt * k3t)
    model.theta_hat = model.theta_hat + (dt / 6.0) * (k1t + 2 * k2t + 2 * k3t + k4t)
    return model, x_hat + (dt / 6.0) * (k1x + 2 * k2x + 2 * k3x + k4x)
