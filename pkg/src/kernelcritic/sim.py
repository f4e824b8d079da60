"""Closed-loop integration of the learning controller on a fixed time grid.

One flat state vector carries the plant, the critic/actor weights, the
least-squares gain matrix, and (for tracking) the observer and parameter
estimates; the cost integral rides along as an extra state so it shares
the integrator's quadrature.  Extrapolation offsets are drawn once per
step and held across integrator stages.
"""

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import adp, dynamics, excitation, sysid
from .basis import ShrinkFunction, StaFBasis, simplex_offsets, triangle_offsets
from .errors import NumericRangeError, ValidationError

# a state this large has left the operating ball; abort before exp overflow
_STATE_NORM_MAX = 1e3

# floor for gain-matrix eigenvalues; clipping below this counts as an event
_GAMMA_EIG_FLOOR = 1e-12


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-3
    duration: float = 10.0
    integrator: str = "rk4"
    seed: int = 1
    record_stride: int = 1

    def validate(self):
        bad = []
        if self.dt <= 0:
            bad.append(f"dt must be > 0 (got {self.dt})")
        if self.duration < 0:
            bad.append(f"duration must be >= 0 (got {self.duration})")
        elif self.dt > 0:
            steps = self.duration / self.dt
            if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
                bad.append(f"duration {self.duration} is not a whole number of dt={self.dt} steps")
        if self.integrator not in ("rk4", "euler"):
            bad.append(f"integrator must be rk4 or euler (got {self.integrator!r})")
        if not isinstance(self.record_stride, int) or self.record_stride < 1:
            bad.append(f"record_stride must be a positive integer (got {self.record_stride})")
        return bad

    def num_steps(self):
        return int(round(self.duration / self.dt))


@dataclass
class Trajectory:
    """Recorded samples of one run; all row arrays share the same length."""
    kind: str
    times: np.ndarray
    states: np.ndarray
    controls: np.ndarray
    w_critic: np.ndarray
    w_actor: np.ndarray
    gamma_min: np.ndarray
    gamma_max: np.ndarray
    cost: np.ndarray
    value_error: Optional[np.ndarray]
    omega_norm: np.ndarray  # (K, L) normalized regressor omega/rho
    extrap_norm: np.ndarray  # (K, N, L) normalized extrapolated regressors
    extrap_offsets: np.ndarray  # (K, N, dim) sampled offsets
    delta: np.ndarray  # (K,) instantaneous Bellman error at the state
    theta: Optional[np.ndarray] = None  # (K, p, n) drift parameter estimates
    dt_sample: float = 1e-3
    clip_events: int = 0
    wall_time: float = 0.0


def regulation_defaults():
    """Gains, basis, extrapolation policy, and initial values of the
    regulation experiment."""
    gains = adp.AdpGains(eta_c1=0.001, eta_c2=0.25, eta_a1=1.2, eta_a2=0.01,
                         beta=0.003, nu=0.05, num_extrap=1)
    basis = StaFBasis(dimension=2, num_kernels=3, offsets=triangle_offsets(),
                      shrink=ShrinkFunction(eps0=0.01, nu2=1.0, scale=0.7, mode="shrinking"))
    policy = excitation.ExtrapolationPolicy(kind="uniform_box_single",
                                            half_width_factor=2.1, num_points=1)
    initial = {
        "x0": np.array([-1.0, 1.0]),
        "w_c0": 0.4 * np.ones(3),
        "w_a0": 0.7 * 0.4 * np.ones(3),
        "gamma0": 500.0 * np.eye(3),
    }
    return gains, basis, policy, initial


def tracking_defaults():
    """Gains, basis, policy, identifier gains, and initial values of the
    tracking experiment (concatenated state dimension 4, five kernels)."""
    gains = adp.AdpGains(eta_c1=0.001, eta_c2=2.0, eta_a1=2.0, eta_a2=0.001,
                         beta=0.01, nu=0.1, num_extrap=1)
    basis = StaFBasis(dimension=4, num_kernels=5, offsets=simplex_offsets(4),
                      shrink=ShrinkFunction(eps0=0.01, nu2=1.0, scale=0.7, mode="constant_one"))
    policy = excitation.ExtrapolationPolicy(kind="uniform_box_single",
                                            half_width_factor=2.1, num_points=1)
    id_gains = sysid.SysIdGains(k=500.0, k_theta=20.0, gamma_theta=np.eye(3))
    initial = {
        "x0": np.zeros(2),
        "x_hat0": np.zeros(2),
        "w_c0": 0.025 * np.ones(5),
        "w_a0": 0.025 * np.ones(5),
        "gamma0": 50.0 * np.eye(5),
        "theta0": np.zeros((3, 2)),
    }
    return gains, basis, policy, id_gains, initial


def _draw_offsets(policy, half_width, dim, rng):
    if policy.kind == "fixed_grid":
        return excitation.grid_offsets(policy.num_points, dim) * half_width
    return rng.uniform(-half_width, half_width, size=(policy.num_points, dim))


def _gamma_postprocess(gamma):
    """Symmetrize and floor the eigenvalues; returns (gamma, clipped, eigs)."""
    gamma = 0.5 * (gamma + gamma.T)
    if not np.all(np.isfinite(gamma)):
        raise NumericRangeError("gain matrix left the representable range")
    try:
        eigs, vecs = np.linalg.eigh(gamma)
    except np.linalg.LinAlgError:
        raise NumericRangeError("gain matrix eigendecomposition failed") from None
    if eigs[0] < _GAMMA_EIG_FLOOR:
        eigs = np.maximum(eigs, _GAMMA_EIG_FLOOR)
        gamma = (vecs * eigs) @ vecs.T
        gamma = 0.5 * (gamma + gamma.T)
        return gamma, True, eigs
    return gamma, False, eigs


class _Recorder:
    _KEYS = ("t", "state", "u", "wc", "wa", "gmin", "gmax", "cost", "verr",
             "onorm", "enorm", "offs", "delta", "theta")

    def __init__(self):
        self.rows = {k: [] for k in self._KEYS}

    def add(self, **kw):
        for k, v in kw.items():
            self.rows[k].append(v)

    def build(self, kind, dt_sample, clip_events, wall, has_verr, has_theta):
        r = self.rows
        return Trajectory(
            kind=kind,
            times=np.array(r["t"]),
            states=np.array(r["state"]),
            controls=np.array(r["u"]),
            w_critic=np.array(r["wc"]),
            w_actor=np.array(r["wa"]),
            gamma_min=np.array(r["gmin"]),
            gamma_max=np.array(r["gmax"]),
            cost=np.array(r["cost"]),
            value_error=np.array(r["verr"]) if has_verr else None,
            omega_norm=np.array(r["onorm"]),
            extrap_norm=np.array(r["enorm"]),
            extrap_offsets=np.array(r["offs"]),
            delta=np.array(r["delta"]),
            theta=np.array(r["theta"]) if has_theta else None,
            dt_sample=dt_sample,
            clip_events=clip_events,
            wall_time=wall,
        )


def run_regulation(config, gains=None, basis=None, policy=None, system=None,
                   cost=None, solution=None, initial=None):
    """Integrate the regulation experiment; returns the recorded Trajectory.

    All arguments default to the benchmark experiment.  Aborts with
    NumericRangeError (carrying the partial trajectory and failure time)
    if the state or weights leave the representable range.
    """
    bad = config.validate() + (gains.validate() if gains is not None else [])
    if bad:
        raise ValidationError(bad)
    d_gains, d_basis, d_policy, d_init = regulation_defaults()
    gains = gains or d_gains
    basis = basis or d_basis
    policy = policy or d_policy
    if system is None:
        system, d_cost, d_sol = dynamics.regulation_benchmark()
        cost = cost if cost is not None else d_cost
        solution = solution if solution is not None else d_sol
    init = dict(d_init)
    init.update(initial or {})

    t_start = time.perf_counter()
    n, L = basis.dimension, basis.num_kernels
    y = np.concatenate([
        np.asarray(init["x0"], dtype=float),
        np.asarray(init["w_c0"], dtype=float),
        np.asarray(init["w_a0"], dtype=float),
        np.asarray(init["gamma0"], dtype=float).ravel(), [0.0]])
    i_x, i_wc, i_wa = slice(0, n), slice(n, n + L), slice(n + L, n + 2 * L)
    i_g = slice(n + 2 * L, n + 2 * L + L * L)
    i_cost = n + 2 * L + L * L

    rng = np.random.Generator(np.random.Philox(config.seed))
    n_steps = config.num_steps()
    dt = config.dt
    rec = _Recorder()
    clip_events = 0
    shrink = basis.shrink
    drift, g_of = system.drift, system.effectiveness
    bellman = adp.bellman_point

    def make_rhs(offsets):
        def rhs(yv):
            x = yv[i_x]
            wc = yv[i_wc]
            wa = yv[i_wa]
            gamma = yv[i_g].reshape(L, L)
            cur = bellman(system, cost, basis, gains, x, x, wc, wa, gamma)
            ext = [bellman(system, cost, basis, gains, x + a, x, wc, wa, gamma)
                   for a in offsets]
            out = np.empty_like(yv)
            out[i_x] = drift(x) + g_of(x) @ cur.control
            out[i_wc] = adp.critic_rhs(gains, gamma, cur, ext)
            out[i_wa] = adp.actor_rhs(gains, wa, wc, cur, ext)
            out[i_g] = adp.gamma_rhs(gains, gamma, cur, ext).ravel()
            out[i_cost] = dynamics.running_cost(cost, x, cur.control)
            if rhs.cur is None:
                rhs.cur, rhs.ext = cur, ext
            return out
        rhs.cur = None
        rhs.ext = None
        return rhs

    def record(t, yv, offsets, eigs, cur, ext):
        x = yv[i_x]
        wc = yv[i_wc]
        verr = (abs(adp.value_estimate(basis, x, wc) - solution.value(x))
                if solution is not None else np.nan)
        rec.add(t=t, state=x.copy(), u=cur.control.copy(), wc=wc.copy(),
                wa=yv[i_wa].copy(), gmin=eigs[0], gmax=eigs[-1], cost=yv[i_cost],
                verr=verr, onorm=cur.omega / cur.rho,
                enorm=np.stack([b.omega / b.rho for b in ext]),
                offs=offsets.copy(), delta=cur.delta, theta=None)

    def build_partial():
        return rec.build("regulation", dt * config.record_stride, clip_events,
                         time.perf_counter() - t_start, solution is not None, False)

    offsets = None
    eigs_now = np.linalg.eigvalsh(y[i_g].reshape(L, L))
    half = 0.5 * dt
    sixth = dt / 6.0
    euler = config.integrator == "euler"
    for k in range(n_steps):
        if offsets is None or policy.resample_every_step:
            w = excitation.box_half_width(policy, shrink.value(y[i_x]))
            offsets = _draw_offsets(policy, w, n, rng)
        rhs = make_rhs(offsets)
        try:
            k1 = rhs(y)
            if k % config.record_stride == 0:
                record(k * dt, y, offsets, eigs_now, rhs.cur, rhs.ext)
            if euler:
                y = y + dt * k1
            else:
                k2 = rhs(y + half * k1)
                k3 = rhs(y + half * k2)
                k4 = rhs(y + dt * k3)
                y = y + sixth * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            gamma, clipped, eigs_now = _gamma_postprocess(y[i_g].reshape(L, L))
        except NumericRangeError as err:
            raise NumericRangeError(str(err), t_fail=(k + 1) * dt,
                                    trajectory=build_partial()) from None
        clip_events += clipped
        y[i_g] = gamma.ravel()
        if not np.all(np.isfinite(y)) or y[i_x] @ y[i_x] > _STATE_NORM_MAX**2:
            raise NumericRangeError("state left the operating range",
                                    t_fail=(k + 1) * dt, trajectory=build_partial())
    if offsets is None or policy.resample_every_step:
        w = excitation.box_half_width(policy, shrink.value(y[i_x]))
        offsets = _draw_offsets(policy, w, n, rng)
    x, wc, wa = y[i_x], y[i_wc], y[i_wa]
    gamma = y[i_g].reshape(L, L)
    cur = bellman(system, cost, basis, gains, x, x, wc, wa, gamma)
    ext = [bellman(system, cost, basis, gains, x + a, x, wc, wa, gamma) for a in offsets]
    record(n_steps * dt, y, offsets, eigs_now, cur, ext)
    return rec.build("regulation", dt * config.record_stride, clip_events,
                     time.perf_counter() - t_start, solution is not None, False)


def run_tracking(config, gains=None, basis=None, policy=None, tracking=None,
                 id_gains=None, initial=None, stack_capacity=10, sg_window=11,
                 sg_order=5, stack_every=10):
    """Integrate the tracking experiment with the concurrent-learning
    identifier; returns the recorded Trajectory.

    Recorded states are the concatenated [error; desired] vector; the
    drift parameter estimate history rides in Trajectory.theta.  The
    feedforward term and the Bellman evaluations use the estimated drift;
    the plant itself evolves with the true one.
    """
    bad = config.validate() + (gains.validate() if gains is not None else [])
    if bad:
        raise ValidationError(bad)
    d_gains, d_basis, d_policy, d_idg, d_init = tracking_defaults()
    gains = gains or d_gains
    basis = basis or d_basis
    policy = policy or d_policy
    id_gains = id_gains or d_idg
    tracking = tracking or dynamics.tracking_benchmark()
    init = dict(d_init)
    init.update(initial or {})

    t_start = time.perf_counter()
    plant = tracking.plant
    n = plant.n
    L = basis.num_kernels
    nz = 2 * n
    feats = sysid.features_benchmark
    p = 3
    zeta_cost = dynamics.CostSpec(
        state_cost=lambda z: tracking.error_cost.state_cost(z[:n]),
        control_weight=tracking.error_cost.control_weight,
    )

    y = np.concatenate([
        np.asarray(init["x0"], dtype=float),
        np.asarray(tracking.desired_initial, dtype=float),
        np.asarray(init["w_c0"], dtype=float),
        np.asarray(init["w_a0"], dtype=float),
        np.asarray(init["gamma0"], dtype=float).ravel(),
        np.asarray(init["x_hat0"], dtype=float),
        np.asarray(init["theta0"], dtype=float).ravel(), [0.0]])
    i_x = slice(0, n)
    i_xd = slice(n, 2 * n)
    i_wc = slice(2 * n, 2 * n + L)
    i_wa = slice(2 * n + L, 2 * n + 2 * L)
    i_g = slice(2 * n + 2 * L, 2 * n + 2 * L + L * L)
    i_xh = slice(2 * n + 2 * L + L * L, 3 * n + 2 * L + L * L)
    i_th = slice(3 * n + 2 * L + L * L, 3 * n + 2 * L + L * L + p * n)
    i_cost = 3 * n + 2 * L + L * L + p * n

    rng = np.random.Generator(np.random.Philox(config.seed))
    n_steps = config.num_steps()
    dt = config.dt
    rec = _Recorder()
    clip_events = 0
    stack = sysid.HistoryStack(stack_capacity, feats)
    deriv = sysid.DerivativeFilter(order=sg_order, window_length=sg_window)
    window_x, window_u = [], []
    stack_sums = None
    bellman = adp.bellman_point

    def stage_eval(yv, offsets):
        """Controller pieces at one packed state."""
        x, xd = yv[i_x], yv[i_xd]
        wc = yv[i_wc]
        wa = yv[i_wa]
        gamma = yv[i_g].reshape(L, L)
        theta = yv[i_th].reshape(p, n)
        drift_fn = lambda xx: theta.T @ feats(xx)
        zeta_sys = dynamics.tracking_transform(tracking, drift_fn=drift_fn)
        zeta = np.concatenate([x - xd, xd])
        u_ff = dynamics.tracking_feedforward(tracking, xd, drift_fn=drift_fn)
        cur = bellman(zeta_sys, zeta_cost, basis, gains, zeta, zeta, wc, wa, gamma)
        ext = [bellman(zeta_sys, zeta_cost, basis, gains, zeta + a, zeta, wc, wa, gamma)
               for a in offsets]
        return cur, ext, u_ff, zeta

    def make_rhs(offsets, sums):
        def rhs(yv):
            x = yv[i_x]
            wc = yv[i_wc]
            wa = yv[i_wa]
            gamma = yv[i_g].reshape(L, L)
            x_hat = yv[i_xh]
            theta = yv[i_th].reshape(p, n)
            cur, ext, u_ff, zeta = stage_eval(yv, offsets)
            mu = cur.control
            u = mu + u_ff
            model = sysid.LinearDriftModel(p=p, features=feats, theta_hat=theta)
            xh_dot, th_dot = sysid.identifier_rhs(model, plant.effectiveness, id_gains,
                                                  x, x_hat, u, stack_sums=sums)
            out = np.empty_like(yv)
            out[i_x] = plant.drift(x) + plant.effectiveness(x) @ u
            out[i_xd] = tracking.desired_dynamics(yv[i_xd])
            out[i_wc] = adp.critic_rhs(gains, gamma, cur, ext)
            out[i_wa] = adp.actor_rhs(gains, wa, wc, cur, ext)
            out[i_g] = adp.gamma_rhs(gains, gamma, cur, ext).ravel()
            out[i_xh] = xh_dot
            out[i_th] = th_dot.ravel()
            # cost prices effort against the true-model feedforward, not the estimate
            mu_true = u - dynamics.tracking_feedforward(tracking, yv[i_xd])
            out[i_cost] = dynamics.running_cost(tracking.error_cost, zeta[:n], mu_true)
            if rhs.parts is None:
                rhs.parts = (cur, ext, u, zeta)
            return out
        rhs.parts = None
        return rhs

    def record(t, yv, offsets, eigs, cur, ext, u, zeta):
        rec.add(t=t, state=zeta.copy(), u=u.copy(), wc=yv[i_wc].copy(),
                wa=yv[i_wa].copy(), gmin=eigs[0], gmax=eigs[-1], cost=yv[i_cost],
                verr=np.nan, onorm=cur.omega / cur.rho,
                enorm=np.stack([b.omega / b.rho for b in ext]),
                offs=offsets.copy(), delta=cur.delta,
                theta=yv[i_th].reshape(p, n).copy())

    def build_partial():
        return rec.build("tracking", dt * config.record_stride, clip_events,
                         time.perf_counter() - t_start, False, True)

    offsets = None
    eigs_now = np.linalg.eigvalsh(y[i_g].reshape(L, L))
    half_width = excitation.box_half_width(policy, basis.shrink.value(np.zeros(nz)))
    half = 0.5 * dt
    sixth = dt / 6.0
    euler = config.integrator == "euler"
    for k in range(n_steps):
        if offsets is None or policy.resample_every_step:
            offsets = _draw_offsets(policy, half_width, nz, rng)
        rhs = make_rhs(offsets, stack_sums)
        try:
            k1 = rhs(y)
            cur, ext, u_now, zeta_now = rhs.parts
            if k % config.record_stride == 0:
                record(k * dt, y, offsets, eigs_now, cur, ext, u_now, zeta_now)
            window_x.append(y[i_x].copy())
            window_u.append(u_now.copy())
            if len(window_x) > sg_window:
                window_x.pop(0)
                window_u.pop(0)
            if euler:
                y = y + dt * k1
            else:
                k2 = rhs(y + half * k1)
                k3 = rhs(y + half * k2)
                k4 = rhs(y + dt * k3)
                y = y + sixth * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            gamma, clipped, eigs_now = _gamma_postprocess(y[i_g].reshape(L, L))
        except NumericRangeError as err:
            raise NumericRangeError(str(err), t_fail=(k + 1) * dt,
                                    trajectory=build_partial()) from None
        clip_events += clipped
        y[i_g] = gamma.ravel()
        if not np.all(np.isfinite(y)) or y[i_x] @ y[i_x] > _STATE_NORM_MAX**2:
            raise NumericRangeError("state left the operating range",
                                    t_fail=(k + 1) * dt, trajectory=build_partial())
        if (k + 1) % stack_every == 0 and len(window_x) == sg_window:
            mid = sg_window // 2
            xdot_est = deriv.derivative(np.asarray(window_x), dt)
            if sysid.stack_insert(stack, (window_x[mid], window_u[mid], xdot_est)):
                stack_sums = stack.sums(plant.effectiveness)
    if offsets is None or policy.resample_every_step:
        offsets = _draw_offsets(policy, half_width, nz, rng)
    cur, ext, u_ff, zeta = stage_eval(y, offsets)
    record(n_steps * dt, y, offsets, eigs_now, cur, ext, cur.control + u_ff, zeta)
    return rec.build("tracking", dt * config.record_stride, clip_events,
                     time.perf_counter() - t_start, False, True)


def metrics(trajectory, steady_window=None):
    """Table-style summary: total cost and steady-state RMS error.

    The error norm is ||x|| for regulation and the error block of the
    concatenated state for tracking.  steady_window defaults to the final
    20% of the run.
    """
    t = trajectory.times
    duration = float(t[-1]) if len(t) else 0.0
    if steady_window is None:
        steady_window = 0.2 * duration
    if steady_window > duration + 1e-12:
        raise ValidationError([f"steady_window {steady_window} exceeds duration {duration}"])
    if trajectory.kind == "tracking":
        err = trajectory.states[:, :trajectory.states.shape[1] // 2]
    else:
        err = trajectory.states
    norms = np.linalg.norm(err, axis=1)
    mask = t >= duration - steady_window - 1e-12
    rms = float(np.sqrt(np.mean(norms[mask] ** 2))) if np.any(mask) else float(norms[-1])
    return {
        "total_cost": float(trajectory.cost[-1]) if len(t) else 0.0,
        "steady_state_rms_error": rms,
        "final_state_norm": float(norms[-1]),
        "duration": duration,
        "wall_time": trajectory.wall_time,
        "clip_events": trajectory.clip_events,
    }
