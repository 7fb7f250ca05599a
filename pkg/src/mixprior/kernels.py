"""Smoothing kernels for location-scale mixtures.

A kernel is an integrable function p on R^d with unit integral, a uniform
Lipschitz bound, and finite moments of every order, carrying a regularity
index gamma in (d/2, inf].  The standard Gaussian density is the default
(gamma = inf); finite-gamma kernels such as the triangular kernel feed the
finite-regularity branch of the rate formulas.  Kernels may be signed.

Kernel objects are immutable after construction and safe to share across
threads.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Callable, Optional

import numpy as np

from .quadrature import tensor_rule

__all__ = [
    "Kernel",
    "MomentTable",
    "ValidationReport",
    "UnsupportedOrderError",
    "gaussian_kernel",
    "triangular_kernel",
    "eval_kernel",
    "kernel_moment",
    "moment_table",
    "validate_kernel",
    "multi_indices",
]

GAUSSIAN_TAIL_RADIUS = 8.5  # univariate N(0,1) mass beyond is < 1e-16


class UnsupportedOrderError(ValueError):
    """Requested moment order exceeds what the kernel guarantees computable."""


@dataclass(frozen=True)
class Kernel:
    """A mixture kernel p on R^d.

    Parameters
    ----------
    name : str
        Identity tag, also used to select fast paths ("gaussian").
    d : int
        Dimension of the argument.
    gamma : float
        Regularity index in (d/2, inf]. Use ``np.inf`` for analytic kernels.
    evaluate : callable
        Vectorized density: maps (n, d) arrays to (n,) values.
    lipschitz_bound : float
        Uniform Lipschitz constant of p on R^d.
    window : float
        Half-width R of the integration window [-R, R]^d; the kernel mass
        outside must be below 1e-10 (exactly zero for compactly supported
        kernels).
    moment_order_max : int
        Highest total degree for which moments are guaranteed computable.
    log_evaluate : callable, optional
        Vectorized log-density, supplied when the kernel is everywhere
        positive; lets mixture evaluation work in log space.
    exact_moment : callable, optional
        Maps a multi-index tuple to an exact `Fraction`, or None when no
        closed form exists for that index.
    quad_order : int
        Gauss-Legendre order per axis for the generic quadrature path.
    """

    name: str
    d: int
    gamma: float
    evaluate: Callable[[np.ndarray], np.ndarray]
    lipschitz_bound: float
    window: float
    moment_order_max: int = 10
    log_evaluate: Optional[Callable[[np.ndarray], np.ndarray]] = None
    exact_moment: Optional[Callable[[tuple], Optional[Fraction]]] = None
    quad_order: int = 64

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"dimension must be >= 1, got {self.d}")
        if not self.gamma > self.d / 2:
            raise ValueError(
                f"regularity gamma must exceed d/2 = {self.d / 2}, got {self.gamma}"
            )
        if self.lipschitz_bound < 0:
            raise ValueError("lipschitz_bound must be nonnegative")


@dataclass(frozen=True)
class MomentTable:
    """Moments m_k = int y^k p(y) dy for all multi-indices with k. <= order."""

    kernel_name: str
    order: int
    moments: dict

    def __getitem__(self, k):
        return self.moments[tuple(k)]


@dataclass(frozen=True)
class CheckItem:
    name: str
    value: float
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    kernel_name: str
    items: tuple
    passed: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "passed", all(it.passed for it in self.items))


def multi_indices(d: int, max_total: int, min_total: int = 0):
    """All k in N_0^d with min_total <= k_1 + ... + k_d <= max_total."""
    out = []
    for k in product(range(max_total + 1), repeat=d):
        if min_total <= sum(k) <= max_total:
            out.append(k)
    return out


def _as_batch(x, d):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        if d != 1:
            raise ValueError(f"point has dimension 1, kernel expects {d}")
        return x.reshape(1, 1), True
    if x.ndim == 1:
        if x.shape[0] != d:
            raise ValueError(f"point has dimension {x.shape[0]}, kernel expects {d}")
        return x.reshape(1, d), True
    if x.shape[-1] != d:
        raise ValueError(f"points have dimension {x.shape[-1]}, kernel expects {d}")
    return x.reshape(-1, d), False


def eval_kernel(kernel: Kernel, x):
    """Evaluate p(x); accepts a single point or an (n, d) batch."""
    batch, single = _as_batch(x, kernel.d)
    if not np.all(np.isfinite(batch)):
        raise ValueError("kernel argument must be finite")
    vals = np.asarray(kernel.evaluate(batch), dtype=float)
    return float(vals[0]) if single else vals


def _quadrature_moment(kernel: Kernel, k) -> float:
    points, weights = tensor_rule(kernel.quad_order, -kernel.window, kernel.window, kernel.d)
    mono = np.prod(points ** np.asarray(k, dtype=float), axis=1)
    return float(weights @ (mono * kernel.evaluate(points)))


def kernel_moment(kernel: Kernel, k) -> float:
    """Moment m_k = int y^k p(y) dy for the multi-index k.

    Uses the kernel's closed form when available, otherwise tensorized
    Gauss-Legendre quadrature on the kernel window.
    """
    k = tuple(int(v) for v in k)
    if len(k) != kernel.d:
        raise ValueError(f"multi-index has length {len(k)}, kernel dimension is {kernel.d}")
    if any(v < 0 for v in k):
        raise ValueError("multi-index entries must be nonnegative")
    if sum(k) > kernel.moment_order_max:
        raise UnsupportedOrderError(
            f"moment order {sum(k)} exceeds moment_order_max={kernel.moment_order_max} "
            f"for kernel '{kernel.name}'"
        )
    if kernel.exact_moment is not None:
        exact = kernel.exact_moment(k)
        if exact is not None:
            return float(exact)
    return _quadrature_moment(kernel, k)


def moment_table(kernel: Kernel, order: Optional[int] = None) -> MomentTable:
    """Tabulate all moments up to the given total degree (default: the max)."""
    order = kernel.moment_order_max if order is None else order
    moments = {k: kernel_moment(kernel, k) for k in multi_indices(kernel.d, order)}
    return MomentTable(kernel_name=kernel.name, order=order, moments=moments)


def validate_kernel(kernel: Kernel, *, norm_tol: float = 1e-6,
                    lipschitz_slack: float = 1e-8,
                    grid_per_axis: int = 201) -> ValidationReport:
    """Numerically check the defining kernel properties.

    Checks: unit integral (quadrature), the Lipschitz bound on a sampled
    grid, and finiteness of all moments up to ``moment_order_max``.
    Failures are reported, not raised.
    """
    items = []

    points, weights = tensor_rule(kernel.quad_order, -kernel.window, kernel.window, kernel.d)
    integral = float(weights @ kernel.evaluate(points))
    items.append(CheckItem(
        name="normalization",
        value=integral,
        passed=abs(integral - 1.0) <= norm_tol,
        detail=f"|int p - 1| = {abs(integral - 1.0):.3e}, tol {norm_tol:.1e}",
    ))

    axis = np.linspace(-kernel.window, kernel.window, grid_per_axis)
    if kernel.d == 1:
        grid = axis[:, None]
    else:
        mesh = np.meshgrid(*([axis] * kernel.d), indexing="ij")
        grid = np.stack([g.ravel() for g in mesh], axis=-1)
    vals = kernel.evaluate(grid)
    max_ratio = 0.0
    step = axis[1] - axis[0]
    shape = (grid_per_axis,) * kernel.d
    vals_nd = vals.reshape(shape)
    for ax in range(kernel.d):
        diffs = np.abs(np.diff(vals_nd, axis=ax)) / step
        max_ratio = max(max_ratio, float(diffs.max()))
    items.append(CheckItem(
        name="lipschitz",
        value=max_ratio,
        passed=max_ratio <= kernel.lipschitz_bound + lipschitz_slack,
        detail=f"max grid ratio {max_ratio:.6g} vs bound {kernel.lipschitz_bound:.6g}",
    ))

    top = [k for k in multi_indices(kernel.d, kernel.moment_order_max)
           if sum(k) in (0, kernel.moment_order_max)]
    moment_vals = [kernel_moment(kernel, k) for k in top]
    finite = all(np.isfinite(v) for v in moment_vals)
    items.append(CheckItem(
        name="moments_finite",
        value=float(np.max(np.abs(moment_vals))),
        passed=finite,
        detail=f"checked total degrees 0 and {kernel.moment_order_max}",
    ))

    return ValidationReport(kernel_name=kernel.name, items=tuple(items))


# ---------------------------------------------------------------------------
# Shipped kernels
# ---------------------------------------------------------------------------

def _double_factorial(n: int) -> int:
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


def _gaussian_exact_moment(k) -> Optional[Fraction]:
    if any(v % 2 for v in k):
        return Fraction(0)
    out = 1
    for v in k:
        out *= _double_factorial(v - 1)
    return Fraction(out)


def gaussian_kernel(d: int = 1, moment_order_max: int = 10) -> Kernel:
    """Standard normal density on R^d (the analytic, gamma = inf class)."""
    log_norm = -0.5 * d * np.log(2.0 * np.pi)

    def evaluate(x):
        x = np.asarray(x, dtype=float)
        return np.exp(log_norm - 0.5 * np.sum(x * x, axis=-1))

    def log_evaluate(x):
        x = np.asarray(x, dtype=float)
        return log_norm - 0.5 * np.sum(x * x, axis=-1)

    # sup |grad p| is attained at |x| = 1
    lipschitz = float(np.exp(log_norm) * np.exp(-0.5))
    return Kernel(
        name="gaussian",
        d=d,
        gamma=np.inf,
        evaluate=evaluate,
        lipschitz_bound=lipschitz,
        window=GAUSSIAN_TAIL_RADIUS,
        moment_order_max=moment_order_max,
        log_evaluate=log_evaluate,
        exact_moment=_gaussian_exact_moment,
    )


def _triangular_exact_moment(k) -> Optional[Fraction]:
    (n,) = k
    if n % 2:
        return Fraction(0)
    return Fraction(2, (n + 1) * (n + 2))


def triangular_kernel(moment_order_max: int = 10) -> Kernel:
    """Triangle density p(y) = (1 - |y|)_+ on R; in the class with gamma = 1."""

    def evaluate(x):
        x = np.asarray(x, dtype=float)
        return np.maximum(0.0, 1.0 - np.abs(x[..., 0]))

    return Kernel(
        name="triangular",
        d=1,
        gamma=1.0,
        evaluate=evaluate,
        lipschitz_bound=1.0,
        window=1.0,
        moment_order_max=moment_order_max,
        exact_moment=_triangular_exact_moment,
    )
