"""Finite-difference helpers shared by the warp, dataset and recovery code."""

from __future__ import annotations

import math

import numpy as np


def nodal_derivatives(x, y, order, width=5):
    """Derivative of ``order`` at every node of a 1-D grid from ``width``-point stencils.

    Stencils are centred where possible and shifted inward at the ends; the
    weights come from a batched, rescaled Taylor (Vandermonde) solve so
    non-uniform grids are handled.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(x)
    width = min(width, n)
    if order >= width:
        raise ValueError("stencil too narrow for the requested order")
    start = np.clip(np.arange(n) - width // 2, 0, n - width)
    idx = start[:, None] + np.arange(width)[None, :]
    offsets = x[idx] - x[:, None]
    scale = np.max(np.abs(offsets), axis=1)
    d = offsets / scale[:, None]
    powers = np.arange(width)
    fact = np.array([math.factorial(p) for p in powers], dtype=float)
    # A[i, p, q] = d_q**p / p!  so that  A @ w = e_order  reproduces Taylor moments
    A = d[:, None, :] ** powers[None, :, None] / fact[None, :, None]
    rhs = np.zeros((n, width))
    rhs[:, order] = 1.0
    w = np.linalg.solve(A, rhs[..., None])[..., 0]
    return np.einsum("ij,ij->i", w, y[idx]) / scale**order


def central(fn, x, h, order=1):
    """Plain central difference of order 1 or 2."""
    if order == 1:
        return (fn(x + h) - fn(x - h)) / (2.0 * h)
    if order == 2:
        return (fn(x + h) - 2.0 * fn(x) + fn(x - h)) / (h * h)
    raise ValueError("central differences implemented for order 1 and 2 only")


def richardson_central(fn, x, h, order=1):
    """Central difference at steps h and h/2 combined to cancel the h**2 term."""
    coarse = central(fn, x, h, order)
    fine = central(fn, x, 0.5 * h, order)
    return (4.0 * fine - coarse) / 3.0


def one_sided_slope(fn, x, h):
    """Three-point forward difference (-3f(x) + 4f(x+h) - f(x+2h)) / 2h."""
    return (-3.0 * fn(x) + 4.0 * fn(x + h) - fn(x + 2.0 * h)) / (2.0 * h)


def richardson_table(values, steps, power=2):
    """Extrapolate ``values[i]`` taken at ``steps[i]`` (halving) to step zero.

    Assumes the error expands in powers of ``step**power`` (Romberg-style);
    returns the diagonal so callers can compare consecutive levels.
    """
    steps = np.asarray(steps, dtype=float)
    table = [list(map(float, values))]
    for level in range(1, len(values)):
        prev = table[-1]
        row = []
        for i in range(len(prev) - 1):
            ratio = (steps[i] / steps[i + level]) ** (power * level)
            row.append((ratio * prev[i + 1] - prev[i]) / (ratio - 1.0))
        table.append(row)
    return [float(row[-1]) for row in table]
