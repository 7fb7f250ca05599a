"""Deterministic tensor-product quadrature on boxes.

All integrals in this package that cannot be done in closed form reduce
to Gauss-Legendre rules on axis-aligned boxes, tensorized across axes.
Rules are cached per (order, interval) so repeated integration against
the same window is cheap.
"""

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=128)
def _leggauss(order: int):
    nodes, weights = np.polynomial.legendre.leggauss(order)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def gauss_legendre(order: int, lo: float, hi: float):
    """Nodes and weights of the `order`-point Gauss-Legendre rule on [lo, hi]."""
    if order < 1:
        raise ValueError(f"quadrature order must be >= 1, got {order}")
    if not hi > lo:
        raise ValueError(f"empty interval [{lo}, {hi}]")
    x, w = _leggauss(order)
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), half * w


def tensor_rule(order: int, lo: float, hi: float, d: int):
    """Tensorized Gauss-Legendre rule on the cube [lo, hi]^d.

    Returns
    -------
    points : ndarray, shape (order**d, d)
        Nodes enumerated row-major with the last axis fastest.
    weights : ndarray, shape (order**d,)
    """
    x, w = gauss_legendre(order, lo, hi)
    if d == 1:
        return x[:, None], w
    grids = np.meshgrid(*([x] * d), indexing="ij")
    points = np.stack([g.ravel() for g in grids], axis=-1)
    weights = w
    for _ in range(d - 1):
        weights = np.multiply.outer(weights, w).ravel()
    return points, weights


def integrate_box(f, order: int, lo: float, hi: float, d: int) -> float:
    """Integrate ``f`` over [lo, hi]^d; ``f`` maps (n, d) arrays to (n,) values."""
    points, weights = tensor_rule(order, lo, hi, d)
    return float(weights @ np.asarray(f(points), dtype=float))


def probe_axis_count(d: int) -> int:
    """Per-axis size of the shared probe grid: 401 for d=1, 101 for d=2."""
    if d == 1:
        return 401
    if d == 2:
        return 101
    return max(11, int(round(20000 ** (1.0 / d))))


def probe_grid(a: float, b: float, d: int):
    """Shared uniform probe grid on [a, b]^d with trapezoid weights."""
    return trapezoid_grid(a, b, d, probe_axis_count(d))


def trapezoid_grid(a: float, b: float, d: int, per_axis: int):
    """Uniform grid on [a, b]^d with tensorized trapezoid weights.

    Used for the shared probe grids: sup-norms are taken as maxima over the
    points, integrals as weighted sums.
    """
    if per_axis < 2:
        raise ValueError("need at least 2 points per axis")
    x = np.linspace(a, b, per_axis)
    w = np.full(per_axis, (b - a) / (per_axis - 1))
    w[0] *= 0.5
    w[-1] *= 0.5
    if d == 1:
        return x[:, None], w
    grids = np.meshgrid(*([x] * d), indexing="ij")
    points = np.stack([g.ravel() for g in grids], axis=-1)
    weights = w
    for _ in range(d - 1):
        weights = np.multiply.outer(weights, w).ravel()
    return points, weights
