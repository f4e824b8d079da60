"""Control-affine plants, cost structures, and the benchmark problems.

Includes the planar regulation benchmark with its known analytic value
function (used as an oracle), and the tracking problem transformation to
the concatenated state zeta = [e; xd].
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import NumericRangeError, ValidationError

# pseudoinverse rank cutoff, relative to the largest singular value
_PINV_RCOND = 1e-10


@dataclass(frozen=True)
class ControlAffineSystem:
    n: int
    m: int
    drift: Callable[[np.ndarray], np.ndarray]
    effectiveness: Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class CostSpec:
    state_cost: Callable[[np.ndarray], float]
    control_weight: np.ndarray  # (m, m), symmetric positive definite
    r_inv: np.ndarray = field(init=False)

    def __post_init__(self):
        r = np.asarray(self.control_weight, dtype=float)
        object.__setattr__(self, "control_weight", r)
        if r.ndim != 2 or r.shape[0] != r.shape[1]:
            raise ValidationError("control_weight must be a square matrix")
        if not np.allclose(r, r.T, atol=1e-12):
            raise ValidationError("control_weight must be symmetric within 1e-12")
        eigs = np.linalg.eigvalsh(r)
        if np.min(eigs) <= 0:
            raise ValidationError("control_weight must be positive definite")
        object.__setattr__(self, "r_inv", np.linalg.inv(r))


@dataclass(frozen=True)
class AnalyticSolution:
    value: Callable[[np.ndarray], float]
    value_gradient: Callable[[np.ndarray], np.ndarray]  # returns (1, n)
    policy: Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class TrackingProblem:
    plant: ControlAffineSystem
    desired_dynamics: Callable[[np.ndarray], np.ndarray]
    desired_initial: np.ndarray
    error_cost: CostSpec


def regulation_benchmark():
    """Planar benchmark whose optimal control problem has a closed-form
    solution: V*(x) = x1^2/2 + x2^2, u*(x) = -(cos(2 x1) + 2) x2."""

    def drift(x):
        c = np.cos(2.0 * x[0]) + 2.0
        return np.array([-x[0] + x[1], -0.5 * (x[0] + x[1] * (1.0 - c * c))])

    def effectiveness(x):
        return np.array([[0.0], [np.cos(2.0 * x[0]) + 2.0]])

    system = ControlAffineSystem(n=2, m=1, drift=drift, effectiveness=effectiveness)
    cost = CostSpec(state_cost=lambda x: float(x @ x), control_weight=np.array([[1.0]]))
    solution = AnalyticSolution(
        value=lambda x: 0.5 * x[0] ** 2 + x[1] ** 2,
        value_gradient=lambda x: np.array([[x[0], 2.0 * x[1]]]),
        policy=lambda x: np.array([-(np.cos(2.0 * x[0]) + 2.0) * x[1]]),
    )
    return system, cost, solution


def tracking_benchmark():
    """Planar tracking problem: the plant drift is the linearly
    parameterized field matching the identifier's feature basis, the
    desired orbit solves a marginally stable linear system, and cost
    penalizes tracking error and the virtual control mu."""

    def drift(x):
        return np.array(
            [-x[0] + x[1], -0.5 * x[0] - 0.5 * x[1] * (np.cos(2.0 * x[0]) + 2.0)]
        )

    def effectiveness(x):
        return np.array([[0.0], [np.cos(2.0 * x[0]) + 2.0]])

    plant = ControlAffineSystem(n=2, m=1, drift=drift, effectiveness=effectiveness)
    a_d = np.array([[-1.0, 1.0], [-2.0, 1.0]])
    error_cost = CostSpec(
        state_cost=lambda e: float(e @ (np.array([10.0, 10.0]) * e)),
        control_weight=np.array([[1.0]]),
    )
    return TrackingProblem(
        plant=plant,
        desired_dynamics=lambda xd: a_d @ xd,
        desired_initial=np.array([0.0, 1.0]),
        error_cost=error_cost,
    )


def hjb_residual(system, cost, v_grad, x):
    """Closed-loop HJB residual of a candidate value gradient at x.

    Zero (to tolerance) everywhere iff v_grad is the gradient of the true
    value function.
    """
    x = np.asarray(x, dtype=float)
    dv = np.asarray(v_grad(x), dtype=float).reshape(1, system.n)
    f = system.drift(x)
    g = system.effectiveness(x)
    dvg = (dv @ g)[0]  # (m,)
    quad = float(dvg @ cost.r_inv @ dvg)
    return -0.25 * quad + float(dv[0] @ f) + float(cost.state_cost(x))


def optimal_policy_from_gradient(system, cost, v_grad_at_x, x):
    """u = -1/2 R^-1 g(x)^T (grad V)^T for a supplied gradient row."""
    dv = np.asarray(v_grad_at_x, dtype=float).reshape(1, system.n)
    g = system.effectiveness(np.asarray(x, dtype=float))
    return -0.5 * (cost.r_inv @ (g.T @ dv.T)).ravel()


def pinv_full_column(g):
    """Pseudoinverse of a full-column-rank matrix via the normal equations.

    Cheaper than an SVD for the tall skinny matrices seen here; raises
    NumericRangeError when the columns are numerically rank deficient.
    """
    g = np.asarray(g, dtype=float)
    gram = g.T @ g
    eigs = np.linalg.eigvalsh(gram)
    if eigs[-1] <= 0 or eigs[0] <= (_PINV_RCOND**2) * eigs[-1]:
        raise NumericRangeError("effectiveness matrix is rank deficient")
    return np.linalg.solve(gram, g.T)


def tracking_feedforward(problem, xd, drift_fn=None):
    """g+(xd) (hd(xd) - f(xd)): the control that keeps e = 0 invariant.

    ``drift_fn`` substitutes an estimated drift (certainty equivalence);
    defaults to the true plant drift.
    """
    f = problem.plant.drift if drift_fn is None else drift_fn
    g_plus = pinv_full_column(problem.plant.effectiveness(xd))
    return g_plus @ (problem.desired_dynamics(xd) - f(xd))


def tracking_transform(problem, drift_fn=None):
    """Concatenated-state system: zeta = [e; xd], zeta' = F(zeta) + G(zeta) mu.

    F embeds the feedforward so that e = 0 is invariant under mu = 0.
    ``drift_fn`` substitutes an estimated drift for the true one.
    """
    n = problem.plant.n
    f = problem.plant.drift if drift_fn is None else drift_fn
    g = problem.plant.effectiveness
    hd = problem.desired_dynamics

    def big_f(zeta):
        e, xd = zeta[:n], zeta[n:]
        x = e + xd
        ff = tracking_feedforward(problem, xd, drift_fn=drift_fn)
        return np.concatenate([f(x) - hd(xd) + g(x) @ ff, hd(xd)])

    def big_g(zeta):
        out = np.zeros((2 * n, problem.plant.m))
        out[:n] = g(zeta[:n] + zeta[n:])
        return out

    return ControlAffineSystem(n=2 * n, m=problem.plant.m, drift=big_f, effectiveness=big_g)


def running_cost(cost, x, u):
    """Instantaneous cost Q(x) + u^T R u."""
    u = np.asarray(u, dtype=float)
    return float(cost.state_cost(np.asarray(x, dtype=float))) + float(
        u @ cost.control_weight @ u
    )
