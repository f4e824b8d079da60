"""Virtual-excitation sampling and empirical excitation diagnostics.

Extrapolation points are sampled around the current state; the learning
laws evaluate the Bellman error there using the known model, which excites
the regressor without injecting probing signals into the plant.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ExtrapolationPolicy:
    kind: str = "uniform_box_single"
    half_width_factor: float = 2.1
    num_points: int = 1
    seed: int = 0
    resample_every_step: bool = True

    def __post_init__(self):
        if self.kind not in ("uniform_box_single", "fixed_grid"):
            raise ValueError(f"unknown extrapolation kind {self.kind!r}")
        if self.num_points < 1:
            raise ValueError("num_points must be >= 1")
        if self.half_width_factor < 0:
            raise ValueError("half_width_factor must be >= 0")


@dataclass(frozen=True)
class PeEstimate:
    c1_hat: float
    c2_hat: float
    c3_hat: float
    window_T: float

    def assumption_satisfied(self):
        return max(self.c1_hat, self.c2_hat, self.c3_hat) > 0


def box_half_width(policy, shrink_value):
    """Half-width of the sampling box; the factor names the box SIDE."""
    return 0.5 * policy.half_width_factor * shrink_value


def sample_points(policy, x, shrink_value, rng):
    """Draw the extrapolation points for one step.

    Returns (points, rng): an (N, dim) array of x + a_i with a_i uniform
    over the closed box, and the generator (advanced in place) so callers
    can thread the state explicitly.
    """
    x = np.asarray(x, dtype=float)
    w = box_half_width(policy, shrink_value)
    if policy.kind == "fixed_grid":
        offs = grid_offsets(policy.num_points, x.size) * w
    else:
        offs = rng.uniform(-w, w, size=(policy.num_points, x.size))
    return x[None, :] + offs, rng


def grid_offsets(n_points, dim):
    """First n_points of a centered lattice in [-1, 1]^dim, C order."""
    per_axis = int(np.ceil(n_points ** (1.0 / dim)))
    if per_axis == 1:
        axes = [np.zeros(1)] * dim
    else:
        axes = [np.linspace(-1.0, 1.0, per_axis)] * dim
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dim)
    return mesh[:n_points]


def pe_windows(omega_norm, extrap_norm, window_t, dt):
    """Empirical excitation constants from recorded normalized regressors.

    omega_norm: (K, L) samples of omega/rho along the trajectory.
    extrap_norm: (K, N, L) samples of omega_i/rho_i.
    c1: smallest windowed integral eigenvalue of the on-trajectory outer
    products; c2: smallest instantaneous eigenvalue of the extrapolated
    average; c3: smallest windowed integral eigenvalue of the same average.
    """
    omega_norm = np.asarray(omega_norm, dtype=float)
    extrap_norm = np.asarray(extrap_norm, dtype=float)
    k = omega_norm.shape[0]
    m = int(round(window_t / dt))
    if m < 1 or m > k:
        raise ValueError(f"window {window_t}s does not fit {k} samples at dt={dt}")

    outer_cur = omega_norm[:, :, None] * omega_norm[:, None, :]
    outer_ext = np.einsum("knl,knp->klp", extrap_norm, extrap_norm) / extrap_norm.shape[1]

    c1 = _min_windowed_eig(outer_cur, m, dt)
    c2 = float(np.min(np.linalg.eigvalsh(outer_ext)[:, 0]))
    c3 = _min_windowed_eig(outer_ext, m, dt)
    return PeEstimate(c1_hat=max(c1, 0.0), c2_hat=max(c2, 0.0),
                      c3_hat=max(c3, 0.0), window_T=window_t)


def _min_windowed_eig(outers, m, dt):
    cum = np.cumsum(outers, axis=0)
    windows = np.concatenate([cum[m - 1 : m], cum[m:] - cum[:-m]], axis=0) * dt
    return float(np.min(np.linalg.eigvalsh(windows)[:, 0]))


def min_effective_eig(gains, gamma_upper, c2_hat):
    """Combined excitation level: forgetting-factor term plus c2/2."""
    return gains.beta / (2.0 * gamma_upper * gains.eta_c2) + 0.5 * c2_hat


def sufficient_condition_report(gains, proxies, c_min, gamma_lower):
    """Advisory check of the two verifiable gain inequalities.

    ``proxies`` supplies empirical sup-norms gathered from a trajectory:
    keys g_w_sigma, w, w_g_sigma, g_sigma.  ``c_min`` is the combined
    excitation level (see min_effective_eig) and ``gamma_lower`` the
    guaranteed gain-matrix floor.  The ideal-weight norms are unknowable,
    so this can only ever be advisory, never a proof.
    """
    lower = gamma_lower
    sqrt_nu = np.sqrt(gains.nu)
    ec = gains.eta_c1 + gains.eta_c2
    ea = gains.eta_a1 + gains.eta_a2

    lhs1 = gains.eta_c2 * c_min / 3.0
    rhs1 = (
        proxies["g_w_sigma"] / (2.0 * lower)
        + ec * proxies["w_g_sigma"] / (4.0 * sqrt_nu)
        + gains.eta_a1
    ) ** 2 / ea
    lhs2 = ea / 4.0
    rhs2 = proxies["g_w_sigma"] / 2.0 + ec * proxies["w"] * proxies["g_sigma"] / (4.0 * sqrt_nu)

    return {
        "c_min": c_min,
        "gain_inequality_1_lhs": lhs1,
        "gain_inequality_1_rhs": rhs1,
        "gain_inequality_1_satisfied": bool(lhs1 >= rhs1),
        "gain_inequality_2_lhs": lhs2,
        "gain_inequality_2_rhs": rhs2,
        "gain_inequality_2_satisfied": bool(lhs2 >= rhs2),
    }
