"""State-following kernel basis.

The basis vector sigma(x, c(x)) travels with the state: each center is the
current state plus a scaled offset direction.  Gradients are taken in the
first argument only, with the centers held fixed; the update laws consume
exactly that partial derivative and never the total one.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NumericRangeError

# exp() overflows a float64 just above 709; leave headroom
_EXP_ARG_MAX = 700.0


@dataclass(frozen=True)
class ShrinkFunction:
    """Scale factor contracting the center polytope near the origin.

    In ``shrinking`` mode value(x) = (x.x + eps0) / (1 + nu2 * x.x); in
    ``constant_one`` mode value(x) = 1.  ``scale`` multiplies the offsets on
    top of the shrink value when centers are placed.
    """

    eps0: float = 0.01
    nu2: float = 1.0
    scale: float = 0.7
    mode: str = "shrinking"

    def __post_init__(self):
        if self.mode not in ("shrinking", "constant_one"):
            raise ValueError(f"unknown shrink mode {self.mode!r}")
        if self.eps0 < 0 or self.nu2 < 0 or self.scale < 0:
            raise ValueError("shrink parameters must be nonnegative")

    def value(self, x):
        if self.mode == "constant_one":
            return 1.0
        q = float(np.dot(x, x))
        return (q + self.eps0) / (1.0 + self.nu2 * q)


@dataclass(frozen=True)
class StaFBasis:
    dimension: int
    num_kernels: int
    offsets: np.ndarray  # (L, n) unit-scale offset directions
    shrink: ShrinkFunction

    def __post_init__(self):
        offs = np.asarray(self.offsets, dtype=float)
        object.__setattr__(self, "offsets", offs)
        if offs.shape != (self.num_kernels, self.dimension):
            raise ValueError(
                f"offsets shape {offs.shape} != ({self.num_kernels}, {self.dimension})"
            )
        if self.dimension < 1 or self.num_kernels < 1:
            raise ValueError("dimension and num_kernels must be positive")


def triangle_offsets():
    """Offset directions used by the planar regulation experiment."""
    return np.array([[0.0, 1.0], [0.87, -0.5], [-0.87, -0.5]])


def simplex_offsets(dim):
    """Vertices of a regular simplex in R^dim: dim+1 points, unit
    circumradius, centered at the origin.

    Recursive construction: in R^1 the vertices are {+1, -1}; in R^m the
    first vertex is e_1 and the rest are -e_1/m plus the (m-1)-simplex
    scaled by sqrt(1 - 1/m^2) in the remaining coordinates.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    sub = simplex_offsets(dim - 1)
    out = np.zeros((dim + 1, dim))
    out[0, 0] = 1.0
    out[1:, 0] = -1.0 / dim
    out[1:, 1:] = np.sqrt(1.0 - 1.0 / dim**2) * sub
    return out


def centers(basis, x):
    """Kernel centers at state x: x + scale * shrink(x) * offsets."""
    x = _check_state(basis, x)
    s = basis.shrink.scale * basis.shrink.value(x)
    return x[None, :] + s * basis.offsets


def sigma(basis, x):
    """Basis vector with components exp(x . c_i(x)) - 1."""
    x = _check_state(basis, x)
    z = centers(basis, x) @ x
    _check_exp_range(z)
    return np.expm1(z)


def grad_sigma(basis, x):
    """Partial gradient of sigma in its first argument, centers fixed.

    Row i is c_i(x)^T * exp(x . c_i(x)).
    """
    x = _check_state(basis, x)
    c = centers(basis, x)
    z = c @ x
    _check_exp_range(z)
    return np.exp(z)[:, None] * c


def grad_sigma_at(basis, x_eval, centers_state):
    """Like grad_sigma but with centers anchored at a different state.

    Used for extrapolated evaluations: the kernel centers stay at the
    current trajectory state while the gradient is taken at x_eval.
    """
    x_eval = _check_state(basis, x_eval)
    c = centers(basis, centers_state)
    z = c @ x_eval
    _check_exp_range(z)
    return np.exp(z)[:, None] * c


def sigma_at(basis, x_eval, centers_state):
    """sigma evaluated at x_eval with centers anchored at centers_state."""
    x_eval = _check_state(basis, x_eval)
    z = centers(basis, centers_state) @ x_eval
    _check_exp_range(z)
    return np.expm1(z)


def _check_state(basis, x):
    x = np.asarray(x, dtype=float)
    if x.shape != (basis.dimension,):
        raise ValueError(f"state shape {x.shape} != ({basis.dimension},)")
    return x


def _check_exp_range(z):
    zmax = float(np.max(z)) if z.size else 0.0
    if not np.isfinite(zmax) or zmax > _EXP_ARG_MAX:
        raise NumericRangeError(f"kernel exponent {zmax} out of range")
