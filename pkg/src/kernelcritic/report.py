"""Render standard figures from a recorded trajectory to PNG files.

Uses the non-interactive backend so it works headless; every figure is
closed after saving to keep long seed sweeps from accumulating state.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from . import dynamics, sysid


def _save(fig, path):
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def _states_figure(traj, path):
    fig, ax = plt.subplots(figsize=(6, 4), layout="constrained")
    t = traj.times
    if traj.kind == "tracking":
        half = traj.states.shape[1] // 2
        for i in range(half):
            ax.plot(t, traj.states[:, i], label=f"e{i + 1}")
        for i in range(half):
            ax.plot(t, traj.states[:, half + i], "--", label=f"xd{i + 1}")
        ax.set_ylabel("error / desired state")
    else:
        for i in range(traj.states.shape[1]):
            ax.plot(t, traj.states[:, i], label=f"x{i + 1}")
        ax.set_ylabel("state")
    ax.set_xlabel("t [s]")
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, alpha=0.3)
    return _save(fig, path)


def _control_figure(traj, path):
    fig, ax = plt.subplots(figsize=(6, 4), layout="constrained")
    for j in range(traj.controls.shape[1]):
        ax.plot(traj.times, traj.controls[:, j], label=f"u{j + 1}")
    if traj.kind == "regulation":
        _, _, solution = dynamics.regulation_benchmark()
        u_star = np.array([solution.policy(x) for x in traj.states])
        for j in range(u_star.shape[1]):
            ax.plot(traj.times, u_star[:, j], "--", label=f"u{j + 1}*")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("control")
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, alpha=0.3)
    return _save(fig, path)


def _weights_figure(traj, path):
    fig, axes = plt.subplots(2, 1, figsize=(6, 6), sharex=True, layout="constrained")
    for i in range(traj.w_critic.shape[1]):
        axes[0].plot(traj.times, traj.w_critic[:, i], label=f"Wc{i + 1}")
        axes[1].plot(traj.times, traj.w_actor[:, i], label=f"Wa{i + 1}")
    axes[0].set_ylabel("critic weights")
    axes[1].set_ylabel("actor weights")
    axes[1].set_xlabel("t [s]")
    for ax in axes:
        ax.legend(loc="best", fontsize=8)
        ax.grid(True, alpha=0.3)
    return _save(fig, path)


def _gamma_figure(traj, path):
    fig, ax = plt.subplots(figsize=(6, 4), layout="constrained")
    ax.semilogy(traj.times, traj.gamma_min, label="min eig")
    ax.semilogy(traj.times, traj.gamma_max, label="max eig")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("gain matrix eigenvalues")
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, alpha=0.3)
    return _save(fig, path)


def _value_error_figure(traj, path):
    fig, ax = plt.subplots(figsize=(6, 4), layout="constrained")
    ax.plot(traj.times, traj.value_error)
    ax.set_xlabel("t [s]")
    ax.set_ylabel("|estimated - optimal value|")
    ax.grid(True, alpha=0.3)
    return _save(fig, path)


def _theta_figure(traj, path):
    fig, ax = plt.subplots(figsize=(6, 4), layout="constrained")
    p, n = traj.theta.shape[1], traj.theta.shape[2]
    flat = traj.theta.reshape(len(traj.times), p * n)
    true_flat = sysid.THETA_TRUE.ravel()
    for j in range(p * n):
        line, = ax.plot(traj.times, flat[:, j], label=f"theta{j // n + 1}{j % n + 1}")
        if j < true_flat.size:
            ax.axhline(true_flat[j], color=line.get_color(), ls="--", lw=0.8)
    ax.set_xlabel("t [s]")
    ax.set_ylabel("drift parameter estimates")
    ax.legend(loc="best", fontsize=7, ncols=2)
    ax.grid(True, alpha=0.3)
    return _save(fig, path)


def _cost_figure(traj, path):
    fig, ax = plt.subplots(figsize=(6, 4), layout="constrained")
    ax.plot(traj.times, traj.cost)
    ax.set_xlabel("t [s]")
    ax.set_ylabel("accumulated cost")
    ax.grid(True, alpha=0.3)
    return _save(fig, path)


def render_figures(out_dir, stem, traj):
    """Write the standard figure set for one trajectory.

    Returns the list of written paths.  The set adapts to the experiment:
    regulation adds the value-error plot and the optimal-control overlay,
    tracking adds the drift-parameter traces.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if len(traj.times) == 0:
        return []
    paths = [
        _states_figure(traj, out / f"{stem}_states.png"),
        _control_figure(traj, out / f"{stem}_control.png"),
        _weights_figure(traj, out / f"{stem}_weights.png"),
        _gamma_figure(traj, out / f"{stem}_gamma.png"),
        _cost_figure(traj, out / f"{stem}_cost.png"),
    ]
    if traj.value_error is not None and not np.all(np.isnan(traj.value_error)):
        paths.append(_value_error_figure(traj, out / f"{stem}_value_error.png"))
    if traj.theta is not None:
        paths.append(_theta_figure(traj, out / f"{stem}_theta.png"))
    return paths
