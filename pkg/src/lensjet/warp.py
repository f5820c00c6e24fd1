"""Warp profiles f(y) and the strip metric g = f(y) dx^2 + dy^2 on R x [0, L]."""

from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import NamedTuple

import numpy as np
import sympy
from scipy.interpolate import CubicHermiteSpline, PchipInterpolator
from scipy.optimize import minimize_scalar

from .errors import DerivativeOrderError, DomainError
from .fd import nodal_derivatives

BOTTOM = "y=0"
TOP = "y=L"
SIDES = (BOTTOM, TOP)

_DOMAIN_SLACK = 1e-12


def _as_output(value, y):
    out = np.broadcast_to(np.asarray(value, dtype=float), np.shape(y))
    return float(out) if out.ndim == 0 else np.array(out)


class WarpFunction:
    """A positive profile on [0, L].

    Subclasses provide ``_eval(y, k)``: the k-th derivative, vectorised and
    without domain checks (the geodesic and shooting code deliberately reads
    the smooth extension slightly outside the strip).
    """

    kind = "abstract"
    name = "warp"
    L = 1.0
    max_order: int | None = None
    breakpoints: tuple = ()
    knots = None

    def __call__(self, y):
        return self.deriv(y, 0)

    def deriv(self, y, k=1):
        self._check_order(k)
        self._check_domain(y)
        return self._eval(y, k)

    def value_and_slope(self, y):
        """(f(y), f'(y)) for a scalar y, no checks; the ODE right-hand side hot path."""
        return float(self._eval(y, 0)), float(self._eval(y, 1))

    def _eval(self, y, k):
        raise NotImplementedError

    def _check_order(self, k):
        if k < 0 or (self.max_order is not None and k > self.max_order):
            raise DerivativeOrderError(
                f"{self.name}: derivative order {k} not supported (max {self.max_order})"
            )

    def _check_domain(self, y):
        arr = np.asarray(y, dtype=float)
        slack = _DOMAIN_SLACK * max(1.0, self.L)
        if np.any(arr < -slack) or np.any(arr > self.L + slack):
            raise DomainError(f"{self.name}: y outside [0, {self.L}]")

    @cached_property
    def extrema(self):
        """(min f, max f) over [0, L]."""
        grid = np.union1d(np.linspace(0.0, self.L, 8193), self.breakpoints)
        vals = np.asarray(self._eval(grid, 0), dtype=float)
        if self.knots is not None:
            return float(vals.min()), float(vals.max())
        lo = self._polish(grid, vals, np.argmin(vals), 1.0)
        hi = self._polish(grid, vals, np.argmax(vals), -1.0)
        return min(lo, float(vals.min())), max(hi, float(vals.max()))

    def _polish(self, grid, vals, i, sign):
        a = grid[max(i - 1, 0)]
        b = grid[min(i + 1, len(grid) - 1)]
        if b <= a:
            return float(vals[i])
        res = minimize_scalar(
            lambda t: sign * float(self._eval(t, 0)),
            bounds=(a, b),
            method="bounded",
            options={"xatol": 1e-12},
        )
        return float(sign * res.fun)

    def to_json(self):
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}(name={self.name!r}, L={self.L!r})"


class ExpressionWarp(WarpFunction):
    """Closed-form profile given as a sympy-parsable expression in ``y``.

    Derivatives of any order are produced symbolically on first use.
    """

    kind = "preset"

    def __init__(self, expr, L, name=None, spec=None):
        if not L > 0:
            raise ValueError("strip width L must be positive")
        self._y = sympy.Symbol("y", real=True)
        self.expr = sympy.sympify(expr, locals={"y": self._y})
        self.L = float(L)
        self.name = name or str(expr)
        self._spec = spec
        self._lock = threading.Lock()
        self._vec = {}
        self._scalar = {}
        lo, _ = self.extrema
        if not lo > 0:
            raise DomainError(f"{self.name}: profile must be positive on [0, L]")

    def _compiled(self, k, scalar):
        table = self._scalar if scalar else self._vec
        fn = table.get(k)
        if fn is None:
            with self._lock:
                fn = table.get(k)
                if fn is None:
                    d = sympy.diff(self.expr, self._y, k) if k else self.expr
                    fn = sympy.lambdify(self._y, d, modules="math" if scalar else "numpy")
                    table[k] = fn
        return fn

    def _eval(self, y, k):
        if np.ndim(y) == 0:
            return float(self._compiled(k, True)(float(y)))
        return _as_output(self._compiled(k, False)(np.asarray(y, dtype=float)), y)

    def value_and_slope(self, y):
        return float(self._compiled(0, True)(y)), float(self._compiled(1, True)(y))

    def to_json(self):
        if self._spec is not None:
            return dict(self._spec)
        return {"kind": "expression", "expr": str(self.expr), "L": self.L, "name": self.name}


def limited_slopes(x, y, d):
    """Clamp Hermite slopes so the cubic stays monotone on every monotone run of data.

    Slopes against the local trend become 0, plateaus get flat ends, and
    (alpha, beta) is pulled into the circle of radius 3.  Nodes where the data
    turn (secants of opposite sign) keep their slope, so smooth extrema are
    not flattened.
    """
    d = np.array(d, dtype=float)
    delta = np.diff(y) / np.diff(x)
    sgn = np.sign(delta)
    n = len(x)
    for i in range(n):
        left = sgn[i - 1] if i > 0 else sgn[0]
        right = sgn[i] if i < n - 1 else sgn[-1]
        if left == right and left != 0 and np.sign(d[i]) != left:
            d[i] = 0.0
    flat = delta == 0.0
    # a flat interval between secants of opposite sign straddles an extremum
    left_sgn = np.r_[0.0, sgn[:-1]]
    right_sgn = np.r_[sgn[1:], 0.0]
    plateau = flat & ~(left_sgn * right_sgn < 0)
    d[:-1][plateau] = 0.0
    d[1:][plateau] = 0.0
    for k in np.nonzero(~flat)[0]:
        if (k > 0 and sgn[k - 1] != sgn[k]) or (k < n - 2 and sgn[k + 1] != sgn[k]):
            continue
        a, b = d[k] / delta[k], d[k + 1] / delta[k]
        r = a * a + b * b
        if r > 9.0:
            t = 3.0 / np.sqrt(r)
            d[k], d[k + 1] = t * a * delta[k], t * b * delta[k]
    return d


class SampledWarp(WarpFunction):
    """Profile known only at grid points.

    Values come from a monotonicity-preserving piecewise cubic: Hermite
    interpolation with 5-point finite-difference slopes, limited
    Fritsch-Carlson style wherever the data are monotone.  First and second
    derivatives are 5-point finite differences at the nodes, carried between
    nodes by PCHIP.
    """

    kind = "sampled"
    max_order = 2

    def __init__(self, ys, fs, L=None, name="sampled"):
        ys = np.asarray(ys, dtype=float)
        fs = np.asarray(fs, dtype=float)
        if ys.ndim != 1 or ys.shape != fs.shape or len(ys) < 5:
            raise ValueError("need matching 1-D arrays with at least 5 samples")
        if np.any(np.diff(ys) <= 0):
            raise ValueError("sample abscissae must be strictly increasing")
        L = float(ys[-1]) if L is None else float(L)
        if ys[0] != 0.0 or abs(ys[-1] - L) > _DOMAIN_SLACK * max(1.0, L):
            raise ValueError("samples must cover [0, L] exactly")
        if np.any(fs <= 0):
            raise DomainError("sampled profile must be positive")
        ys[-1] = L
        self.L = L
        self.name = name
        self.knots = ys
        self.values = fs
        self.breakpoints = tuple(ys)
        slopes = nodal_derivatives(ys, fs, 1)
        self._interp = [
            CubicHermiteSpline(ys, fs, limited_slopes(ys, fs, slopes), extrapolate=True),
            PchipInterpolator(ys, slopes, extrapolate=True),
            PchipInterpolator(ys, nodal_derivatives(ys, fs, 2), extrapolate=True),
        ]

    def _eval(self, y, k):
        return _as_output(self._interp[k](y), y)

    def to_json(self):
        return {
            "kind": "sampled",
            "L": self.L,
            "name": self.name,
            "points": [[float(a), float(b)] for a, b in zip(self.knots, self.values)],
        }


class ReflectedWarp(WarpFunction):
    """y -> f(L - y): views the strip from its top boundary."""

    def __init__(self, base):
        self.base = base
        self.L = base.L
        self.kind = base.kind
        self.max_order = base.max_order
        self.name = f"reflected({base.name})"
        self.breakpoints = tuple(sorted(self.L - b for b in base.breakpoints))
        if base.knots is not None:
            self.knots = self.L - base.knots[::-1]

    def _eval(self, y, k):
        return (-1) ** k * self.base._eval(self.L - np.asarray(y, dtype=float), k)

    def value_and_slope(self, y):
        f, df = self.base.value_and_slope(self.L - y)
        return f, -df

    def to_json(self):
        return {"kind": "reflected", "base": self.base.to_json()}


@dataclass(frozen=True)
class StripMetric:
    """g_xx = f(y), g_xy = 0, g_yy = 1."""

    warp: WarpFunction

    @property
    def L(self):
        return self.warp.L


@dataclass(frozen=True)
class JetVector:
    """Inward normal derivatives of g_11 at one boundary component, orders 0..K."""

    side: str
    values: tuple

    @property
    def K(self):
        return len(self.values) - 1


class Christoffel(NamedTuple):
    g2_11: float
    g1_12: float
    g1_11: float = 0.0
    g1_22: float = 0.0
    g2_12: float = 0.0
    g2_22: float = 0.0


def _as_metric(m):
    return m if isinstance(m, StripMetric) else StripMetric(m)


def metric_components(m, y):
    m = _as_metric(m)
    return m.warp(y), 0.0, 1.0


def christoffel(m, y):
    m = _as_metric(m)
    f = m.warp(y)
    df = m.warp.deriv(y, 1)
    return Christoffel(g2_11=-0.5 * df, g1_12=0.5 * df / f)


def second_fundamental_form(m, side):
    """II(d_x, d_x) / g_xx against the inward normal; > 0 means a convex direction."""
    w = _as_metric(m).warp
    if side == BOTTOM:
        return -w.deriv(0.0, 1) / (2.0 * w(0.0))
    if side == TOP:
        return w.deriv(w.L, 1) / (2.0 * w(w.L))
    raise ValueError(f"unknown side {side!r}")


def ground_truth_jet(m, side, K):
    w = _as_metric(m).warp
    if side == BOTTOM:
        vals = [w.deriv(0.0, k) for k in range(K + 1)]
    elif side == TOP:
        vals = [(-1) ** k * w.deriv(w.L, k) for k in range(K + 1)]
    else:
        raise ValueError(f"unknown side {side!r}")
    return JetVector(side, tuple(float(v) for v in vals))


def jet_compare(j1, j2, tol):
    """Smallest order at which the jets differ by more than ``tol``; None if equal."""
    if j1.K != j2.K or j1.side != j2.side:
        raise ValueError("jets must share side and order")
    for k, (a, b) in enumerate(zip(j1.values, j2.values)):
        if abs(a - b) > tol:
            return k
    return None


# --- presets and JSON ------------------------------------------------------

_EXPRESSION_PRESETS = {
    # name: (expression, default L, L overridable)
    "flat": ("1", 2.0 * math.pi, True),
    "cos1": ("2 - cos(y)", 2.0 * math.pi, False),
    "cos2": ("2 - cos(2*y)", 2.0 * math.pi, False),
    "exp-decay": ("exp(-y)", 1.0, True),
    "quad-decay": ("(1 - y)**2", 0.4, True),
    "tanh-decay": ("1 - tanh(y)", 1.0, True),
}

PRESET_NAMES = tuple(_EXPRESSION_PRESETS) + ("sec5-f1", "sec5-f2")

_cache_lock = threading.Lock()
_preset_cache = {}


def preset(name, L=None):
    """Named profile; instances are cached so repeated lookups share compiled derivatives."""
    key = (name, L)
    with _cache_lock:
        hit = _preset_cache.get(key)
    if hit is not None:
        return hit
    if name in _EXPRESSION_PRESETS:
        expr, default_L, free_L = _EXPRESSION_PRESETS[name]
        if L is not None and not free_L and abs(L - default_L) > 1e-12:
            raise ValueError(f"preset {name!r} has fixed L={default_L}")
        width = default_L if L is None else float(L)
        spec = {"kind": "preset", "name": name}
        if free_L:
            spec["L"] = width
        w = ExpressionWarp(expr, width, name=name, spec=spec)
    elif name in ("sec5-f1", "sec5-f2"):
        from . import section5

        profile = section5.build_f1()
        w = profile.f1 if name == "sec5-f1" else section5.build_f2(profile)
    else:
        raise ValueError(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}")
    with _cache_lock:
        _preset_cache.setdefault(key, w)
        return _preset_cache[key]


def warp_from_json(obj):
    kind = obj.get("kind")
    if kind == "preset":
        return preset(obj["name"], obj.get("L"))
    if kind == "sampled":
        pts = np.asarray(obj["points"], dtype=float)
        return SampledWarp(pts[:, 0], pts[:, 1], L=obj.get("L"), name=obj.get("name", "sampled"))
    if kind == "expression":
        return ExpressionWarp(obj["expr"], obj["L"], name=obj.get("name"))
    if kind == "reflected":
        return ReflectedWarp(warp_from_json(obj["base"]))
    raise ValueError(f"unknown warp kind {kind!r}")


def load_warp(source, L=None):
    """Resolve a preset name, a JSON file path, or an already-parsed dict."""
    if isinstance(source, WarpFunction):
        return source
    if isinstance(source, dict):
        return warp_from_json(source)
    text = str(source)
    if text in PRESET_NAMES:
        return preset(text, L)
    path = Path(text)
    if path.exists():
        return warp_from_json(json.loads(path.read_text()))
    raise ValueError(f"{text!r} is neither a preset name nor a readable warp JSON file")
