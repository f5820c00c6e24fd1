"""Geodesics of the warped strip: ODE integration, Clairaut-integral quadrature, chords, shooting."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq

from .errors import (
    DegenerateTurningError,
    GrazingError,
    NoChordError,
    NoTurningPointError,
    ShootingError,
    ToleranceFailure,
    TrappedError,
)
from .warp import BOTTOM, TOP, StripMetric, _as_metric

RTOL = 1e-11
ATOL = 1e-13
MAX_LENGTH = 1e4
DEGENERATE_SLOPE = 1e-8

# Gauss-Legendre nodes on [0, 1]
_GL_U = np.polynomial.legendre.leggauss(48)
_GL_THETA = np.polynomial.legendre.leggauss(16)
_GL_PANEL = np.polynomial.legendre.leggauss(10)


def _unit(nodes):
    x, w = nodes
    return 0.5 * (x + 1.0), 0.5 * w


_U01, _WU01 = _unit(_GL_U)
_T01, _WT01 = _unit(_GL_THETA)
_P01, _WP01 = _unit(_GL_PANEL)


@dataclass(frozen=True)
class GeodesicState:
    x: float
    y: float
    vx: float
    vy: float

    def speed_residual(self, m):
        f = _as_metric(m).warp._eval(self.y, 0)
        return f * self.vx**2 + self.vy**2 - 1.0

    @classmethod
    def from_clairaut(cls, m, x, y, c, upward=True):
        """Unit-speed state at (x, y) with Clairaut constant c and the given vertical sense."""
        f = float(_as_metric(m).warp._eval(y, 0))
        vy2 = 1.0 - c * c / f
        if vy2 < 0:
            raise GrazingError(f"Clairaut constant {c} exceeds sqrt(f)={math.sqrt(f)} at y={y}")
        vy = math.sqrt(vy2)
        return cls(x, y, c / f, vy if upward else -vy)

    @classmethod
    def from_angle(cls, m, x, y, theta):
        """Unit-speed state making angle ``theta`` with d_x in an orthonormal frame."""
        f = float(_as_metric(m).warp._eval(y, 0))
        return cls(x, y, math.cos(theta) / math.sqrt(f), math.sin(theta))


@dataclass(frozen=True)
class ExitEvent:
    T: float
    exit_x: float
    exit_side: str
    exit_vx: float
    exit_vy: float
    clairaut_drift: float


def clairaut(m, s):
    """Conserved x'(t) f(y(t))."""
    return s.vx * float(_as_metric(m).warp._eval(s.y, 0))


def _rhs(warp):
    fslope = warp.value_and_slope

    def rhs(t, s):
        _, y, vx, vy = s
        f, df = fslope(y)
        # x'' = -2 G^1_12 x' y',  y'' = -G^2_11 x'^2
        return [vx, vy, -(df / f) * vx * vy, 0.5 * df * vx * vx]

    return rhs


def integrate_to_boundary(m, s0, tol=1e-12, rtol=RTOL, max_length=MAX_LENGTH):
    """Follow the geodesic from ``s0`` until it first reaches y = 0 or y = L."""
    m = _as_metric(m)
    warp = m.warp
    L = m.L

    def hit_bottom(t, s):
        return s[1]

    def hit_top(t, s):
        return s[1] - L

    hit_bottom.terminal = hit_top.terminal = True
    hit_bottom.direction = -1.0
    hit_top.direction = 1.0

    sol = solve_ivp(
        _rhs(warp),
        (0.0, max_length),
        [s0.x, s0.y, s0.vx, s0.vy],
        method="DOP853",
        rtol=rtol,
        atol=min(ATOL, tol),
        events=(hit_bottom, hit_top),
    )
    if sol.status == -1:
        raise ToleranceFailure(sol.message)
    if sol.status == 0:
        raise TrappedError(f"no boundary crossing within length {max_length}")
    if len(sol.t_events[0]):
        side, (T,), (state,) = BOTTOM, sol.t_events[0], sol.y_events[0]
    else:
        side, (T,), (state,) = TOP, sol.t_events[1], sol.y_events[1]
    c0 = clairaut(m, s0)
    f_path = np.asarray(warp._eval(sol.y[1], 0), dtype=float)
    drift = float(np.max(np.abs(sol.y[2] * f_path - c0)))
    f_exit = float(warp._eval(state[1], 0))
    drift = max(drift, abs(state[2] * f_exit - c0))
    return ExitEvent(
        T=float(T),
        exit_x=float(state[0]),
        exit_side=side,
        exit_vx=float(state[2]),
        exit_vy=float(state[3]),
        clairaut_drift=drift,
    )


# --- crossing integrals ----------------------------------------------------


def _integrate(warp, fn, a, b):
    """Integrate fn(y) over [a, b]; panel Gauss-Legendre on sampled knots, adaptive otherwise."""
    if warp.knots is not None:
        knots = warp.knots
        inner = knots[(knots > a) & (knots < b)]
        edges = np.concatenate(([a], inner, [b]))
        widths = np.diff(edges)
        ys = edges[:-1, None] + widths[:, None] * _P01[None, :]
        return float(np.sum(fn(ys) * _WP01[None, :] * widths[:, None]))
    points = [p for p in warp.breakpoints if a < p < b] or None
    val, _ = quad(fn, a, b, points=points, epsabs=1e-14, epsrel=1e-13, limit=500)
    return float(val)


def _transversal_constant(m, u0):
    """Clairaut constant for boundary tangential velocity u0 at y = 0, with grazing check."""
    warp = m.warp
    c = u0 * float(warp._eval(0.0, 0))
    fmin = warp.extrema[0]
    if c * c >= fmin:
        raise GrazingError(f"u0={u0}: c^2={c * c} >= min f={fmin}; no crossing")
    return c


def crossing_time(m, u0):
    """Length of the geodesic entering at y = 0 with x'(0) = u0 and leaving at y = L."""
    m = _as_metric(m)
    if u0 == 0.0:
        return m.L
    c2 = _transversal_constant(m, u0) ** 2
    warp = m.warp
    return _integrate(warp, lambda y: 1.0 / np.sqrt(1.0 - c2 / warp._eval(y, 0)), 0.0, m.L)


def crossing_displacement(m, u0):
    """x(T) - x(0) for the crossing geodesic with x'(0) = u0."""
    m = _as_metric(m)
    if u0 == 0.0:
        return 0.0
    c = _transversal_constant(m, u0)
    warp = m.warp

    def integrand(y):
        f = warp._eval(y, 0)
        return (c / f) / np.sqrt(1.0 - c * c / f)

    return _integrate(warp, integrand, 0.0, m.L)


# --- same-side chords --------------------------------------------------------


@dataclass(frozen=True)
class Chord:
    """A geodesic leaving y = 0 and returning to it after turning at depth ``depth``."""

    length: float
    delta_x: float
    c: float
    depth: float


def chord_from_depth(m, depth, sign=1.0):
    """Chord with turning depth ``depth`` (so c^2 = f(depth)).

    With y = depth - u^2 the integrands become smooth in u; the difference
    f(y) - f(depth) is formed as u^2 times the mean of -f' over [y, depth],
    which avoids cancellation for shallow chords.
    """
    warp = _as_metric(m).warp
    if depth <= 0.0:
        return Chord(0.0, 0.0, sign * math.sqrt(float(warp._eval(0.0, 0))), 0.0)
    umax = math.sqrt(depth)
    u = umax * _U01
    y = depth - u * u
    # mean slope: D(u) = int_0^1 -f'(depth - theta u^2) dtheta
    pts = depth - np.outer(u * u, _T01)
    D = -(np.asarray(warp._eval(pts, 1), dtype=float) @ _WT01)
    if np.any(D <= 0):
        raise NoChordError(f"profile not decreasing on [0, {depth}]")
    f = np.asarray(warp._eval(y, 0), dtype=float)
    c = math.sqrt(float(warp._eval(depth, 0)))
    length = 4.0 * umax * float(np.sum(_WU01 * np.sqrt(f / D)))
    dx = 4.0 * c * umax * float(np.sum(_WU01 / np.sqrt(f * D)))
    return Chord(length, sign * dx, sign * c, depth)


def _turning_depth(warp, c2):
    grid = np.linspace(0.0, warp.L, 4097)
    vals = np.asarray(warp._eval(grid, 0), dtype=float) - c2
    if vals[0] <= 0:
        raise GrazingError("chord needs f(0) > c^2")
    below = np.nonzero(vals <= 0)[0]
    if not len(below):
        raise NoTurningPointError(f"f never descends to c^2={c2} on [0, L]")
    i = below[0]
    if vals[i] == 0.0:
        return float(grid[i])
    return brentq(lambda t: float(warp._eval(t, 0)) - c2, grid[i - 1], grid[i], xtol=1e-15, rtol=8.9e-16)


def chord_same_side(m, c):
    """(length, delta_x) of the geodesic leaving y = 0 with Clairaut constant c and returning."""
    warp = _as_metric(m).warp
    depth = _turning_depth(warp, c * c)
    if abs(float(warp._eval(depth, 1))) < DEGENERATE_SLOPE:
        raise DegenerateTurningError(f"f'(y*) ~ 0 at turning depth {depth}")
    ch = chord_from_depth(m, depth, math.copysign(1.0, c))
    return ch.length, ch.delta_x


def chord_between(m, x1, x2):
    """Chord joining boundary points x1 -> x2 on y = 0, found by solving for the turning depth."""
    m = _as_metric(m)
    warp = m.warp
    span = abs(x2 - x1)
    sign = 1.0 if x2 >= x1 else -1.0
    if span == 0.0:
        return chord_from_depth(m, 0.0, sign)
    if not float(warp._eval(0.0, 1)) < 0.0:
        raise NoChordError("boundary is not strictly convex in d_x: no interior chord")

    def reach(t):
        return chord_from_depth(m, t * t).delta_x

    # bracket in t = sqrt(depth): delta_x grows roughly linearly in t for shallow chords
    lo = 0.0
    hi = min(span * math.sqrt(-float(warp._eval(0.0, 1)) / (8.0 * float(warp._eval(0.0, 0)))), 0.5 * math.sqrt(m.L))
    hi = max(hi, 1e-8)
    prev = 0.0
    while True:
        if hi * hi >= m.L:
            raise NoChordError("turning depth would leave the strip")
        try:
            r = reach(hi)
        except NoChordError:
            raise NoChordError("no monotone chord family reaches this separation") from None
        if r < prev:
            raise NoChordError("chord displacement not monotone in turning depth")
        if r >= span:
            break
        lo, prev, hi = hi, r, 2.0 * hi
    t = brentq(lambda t: reach(t) - span, lo, hi, xtol=1e-17, rtol=8.9e-16, maxiter=200)
    return chord_from_depth(m, t * t, sign)


# --- interior distance by shooting -------------------------------------------


def _shoot(m, p, q, theta, rtol):
    warp = m.warp
    s0 = GeodesicState.from_angle(m, p[0], p[1], theta)
    if (q[0] - p[0]) < 0:
        s0 = GeodesicState(s0.x, s0.y, -s0.vx, s0.vy)

    def reach_x(t, s):
        return s[0] - q[0]

    reach_x.terminal = True
    bound = 50.0 * (abs(q[0] - p[0]) * math.sqrt(max(float(warp._eval(p[1], 0)), 1e-300)) + abs(q[1] - p[1])) + 1.0
    sol = solve_ivp(
        _rhs(warp),
        (0.0, bound),
        [s0.x, s0.y, s0.vx, s0.vy],
        method="DOP853",
        rtol=rtol,
        atol=1e-15,
        events=reach_x,
    )
    if not len(sol.t_events[0]):
        return None, None
    return float(sol.y_events[0][0][1] - q[1]), float(sol.t_events[0][0])


def interior_distance(m, p, q, rtol=1e-12, max_iter=200):
    """Length of the short geodesic from p to q, found by shooting over the launch angle."""
    m = _as_metric(m)
    p = (float(p[0]), float(p[1]))
    q = (float(q[0]), float(q[1]))
    dx, dy = q[0] - p[0], q[1] - p[1]
    if dx == 0.0:
        return abs(dy)
    f = float(m.warp._eval(p[1], 0))
    theta0 = math.atan2(dy, math.sqrt(f) * abs(dx))
    limit = 0.5 * math.pi - 1e-9
    cache = {}

    def residual(theta):
        if theta not in cache:
            cache[theta] = _shoot(m, p, q, theta, rtol)
        r, _ = cache[theta]
        if r is None:
            # never reached x = qx: treat as overshooting in the launch direction
            return math.copysign(1e3, theta - theta0)
        return r

    width = 0.05
    for _ in range(40):
        a, b = max(theta0 - width, -limit), min(theta0 + width, limit)
        ra, rb = residual(a), residual(b)
        if ra == 0.0:
            return cache[a][1]
        if rb == 0.0:
            return cache[b][1]
        if ra < 0 < rb:
            break
        width *= 2.0
        if a <= -limit and b >= limit:
            raise ShootingError("launch-angle bracket not found")
    else:
        raise ShootingError("launch-angle bracket not found")
    try:
        theta = brentq(residual, a, b, xtol=1e-15, rtol=8.9e-16, maxiter=max_iter)
    except RuntimeError as exc:
        raise ShootingError(str(exc)) from exc
    r, T = _shoot(m, p, q, theta, rtol)
    if r is None or abs(r) > 1e-9:
        raise ShootingError(f"arrival error {r}")
    return T


def hessian_rho_check(m, p, v, h):
    """(2|v|_g^2, central second difference of rho(c(t), c(0)) at step h) for c(t) = p + t v."""
    m = _as_metric(m)
    f = float(m.warp._eval(p[1], 0))
    lhs = 2.0 * (f * v[0] ** 2 + v[1] ** 2)

    def rho(t):
        return interior_distance(m, (p[0] + t * v[0], p[1] + t * v[1]), p) ** 2

    rhs = (rho(h) + rho(-h)) / (h * h)
    return lhs, rhs


__all__ = [
    "Chord",
    "ExitEvent",
    "GeodesicState",
    "StripMetric",
    "chord_between",
    "chord_from_depth",
    "chord_same_side",
    "clairaut",
    "crossing_displacement",
    "crossing_time",
    "hessian_rho_check",
    "integrate_to_boundary",
    "interior_distance",
]
