"""Bellman-error regressors and the critic/actor/gain-matrix update laws.

The Bellman error at an evaluation point x_eval (the current state or an
extrapolated point) uses kernel centers anchored at the CURRENT state, so
the same basis explains both the on-trajectory and the virtual data.

Normalization: rho = 1 + nu * omega^T Gamma omega.  The critic and actor
updates divide by rho, the gain-matrix sources by rho^2.  With this
weighting the critic update rate is bounded by (eta_c1 + eta_c2)/nu
independent of ||Gamma||, which keeps the coupled system integrable at the
millisecond step used by the experiments.
"""

from dataclasses import dataclass

import numpy as np

from .basis import grad_sigma_at, sigma
from .errors import ValidationError


@dataclass(frozen=True)
class AdpGains:
    eta_c1: float
    eta_c2: float
    eta_a1: float
    eta_a2: float
    beta: float
    nu: float
    num_extrap: int = 1

    def validate(self):
        """Collect violations; eta_c2 = 0 is allowed (disables extrapolation)."""
        bad = []
        for name in ("eta_c1", "eta_a1", "eta_a2", "beta", "nu"):
            if getattr(self, name) <= 0:
                bad.append(f"{name} must be > 0 (got {getattr(self, name)})")
        if self.eta_c2 < 0:
            bad.append(f"eta_c2 must be >= 0 (got {self.eta_c2})")
        if not isinstance(self.num_extrap, int) or self.num_extrap < 1:
            bad.append(f"num_extrap must be a positive integer (got {self.num_extrap})")
        return bad


@dataclass
class AdpState:
    w_critic: np.ndarray  # (L,)
    w_actor: np.ndarray  # (L,)
    gamma: np.ndarray  # (L, L)


@dataclass(frozen=True)
class BePoint:
    x_eval: np.ndarray
    omega: np.ndarray  # (L,)
    rho: float
    delta: float
    g_sigma: np.ndarray  # (L, L)
    control: np.ndarray  # (m,) the policy evaluated at x_eval


def bellman_point(system, cost, basis, gains, x_eval, centers_state, w_critic,
                  w_actor, gamma):
    """Evaluate the Bellman error and its regressor at x_eval.

    centers_state is the current trajectory state; kernels stay anchored
    there even when x_eval is extrapolated.
    """
    x_eval = np.asarray(x_eval, dtype=float)
    grad = grad_sigma_at(basis, x_eval, centers_state)
    g = system.effectiveness(x_eval)
    gg = grad @ g  # (L, m)
    u = -0.5 * (cost.r_inv @ (gg.T @ w_actor))
    omega = grad @ system.drift(x_eval) + gg @ u
    rho = 1.0 + gains.nu * float(omega @ gamma @ omega)
    delta = float(w_critic @ omega) + float(cost.state_cost(x_eval)) + float(
        u @ cost.control_weight @ u
    )
    g_sigma = gg @ cost.r_inv @ gg.T
    return BePoint(x_eval=x_eval, omega=omega, rho=rho, delta=delta,
                   g_sigma=g_sigma, control=u)


def critic_rhs(gains, gamma, be_current, be_extrap):
    """Normalized least-squares update direction for the critic weights."""
    if len(be_extrap) != gains.num_extrap:
        raise ValueError(f"expected {gains.num_extrap} extrapolated points")
    out = -gains.eta_c1 * (gamma @ (be_current.omega / be_current.rho)) * be_current.delta
    w = gains.eta_c2 / gains.num_extrap
    for p in be_extrap:
        out = out - w * (gamma @ (p.omega / p.rho)) * p.delta
    return out


def gamma_rhs(gains, gamma, be_current, be_extrap):
    """Gain-matrix dynamics: forgetting-factor growth minus information flow.

    The regressor sources carry rho^2; the critic update carries rho to the
    first power.  Keeping the powers straight matters, a mixed-up
    implementation changes trajectories at the 10% level.
    """
    if len(be_extrap) != gains.num_extrap:
        raise ValueError(f"expected {gains.num_extrap} extrapolated points")
    src = gains.eta_c1 * np.outer(be_current.omega, be_current.omega) / be_current.rho**2
    w = gains.eta_c2 / gains.num_extrap
    for p in be_extrap:
        src = src + w * np.outer(p.omega, p.omega) / p.rho**2
    return gains.beta * gamma - gamma @ src @ gamma


def actor_rhs(gains, w_actor, w_critic, be_current, be_extrap):
    """Actor update: tracks the critic plus the policy-gradient corrections."""
    if len(be_extrap) != gains.num_extrap:
        raise ValueError(f"expected {gains.num_extrap} extrapolated points")
    out = -gains.eta_a1 * (w_actor - w_critic) - gains.eta_a2 * w_actor
    out = out + (gains.eta_c1 / (4.0 * be_current.rho)) * (
        be_current.g_sigma.T @ w_actor
    ) * float(be_current.omega @ w_critic)
    w = gains.eta_c2 / (4.0 * gains.num_extrap)
    for p in be_extrap:
        out = out + (w / p.rho) * (p.g_sigma.T @ w_actor) * float(p.omega @ w_critic)
    return out


def policy(basis, system, cost, x, w_actor):
    """Feedback control applied to the plant: -1/2 R^-1 g^T grad_sigma^T Wa."""
    x = np.asarray(x, dtype=float)
    grad = grad_sigma_at(basis, x, x)
    g = system.effectiveness(x)
    return -0.5 * (cost.r_inv @ ((grad @ g).T @ w_actor))


def value_estimate(basis, x, w_critic):
    """Estimated value Wc . sigma(x, c(x)); exactly zero at the origin."""
    return float(np.asarray(w_critic, dtype=float) @ sigma(basis, x))


def gamma_lower_bound(gains, gamma0_min_eig):
    """Guaranteed floor on the gain-matrix eigenvalues."""
    return 1.0 / (1.0 / gamma0_min_eig + (gains.eta_c1 + gains.eta_c2) / (gains.beta * gains.nu))


def gamma_bounds(gains, gamma0_min_eig, gamma0_max_eig, pe, window_t):
    """Eigenvalue envelope for the gain matrix under measured excitation.

    ``pe`` carries the empirical excitation constants (see
    excitation.PeEstimate).  The upper bound uses the excitation term only
    when it is informative (strictly positive); with no excitation the
    initial-condition term alone applies.
    """
    if gamma0_min_eig <= 0 or gamma0_max_eig <= 0:
        raise ValidationError("initial gain matrix must be positive definite")
    lower = gamma_lower_bound(gains, gamma0_min_eig)
    pe_term = gains.eta_c1 * pe.c1_hat + gains.eta_c2 * max(
        pe.c2_hat * window_t, pe.c3_hat
    )
    denom_core = 1.0 / gamma0_max_eig
    if pe_term > 0:
        denom_core = min(pe_term, denom_core)
    denom = denom_core * np.exp(-gains.beta * window_t)
    if denom <= 0:
        raise ValidationError("gain bound denominator is nonpositive; excitation assumption violated")
    return lower, 1.0 / denom
