"""Localized boundary distance data near a base point on y = 0.

A dataset serves tau (the boundary distance function restricted to pairs of
points within eps of x0) and mu (distance along the boundary curve itself).
It is the only thing the jet recovery code reads.
"""

from __future__ import annotations

import csv
import json
import math
import threading
from pathlib import Path

import numpy as np
from scipy.interpolate import RectBivariateSpline

from .errors import DomainError, LensJetError, NonTransversalError
from .fd import central, richardson_central
from .geodesic import chord_between
from .warp import StripMetric, _as_metric

NO_EVIDENCE = "no-evidence"
NONCONCAVE = "nonconcave-evidence"
TRANSVERSAL_TOL = 1e-12


class BoundaryDistanceDataset:
    """Common interface; subclasses implement ``_tau``."""

    source = "abstract"
    metric: StripMetric | None = None

    def __init__(self, x0, eps, g11, h=None):
        if eps <= 0 or g11 <= 0:
            raise ValueError("eps and g11 must be positive")
        self.x0 = float(x0)
        self.eps = float(eps)
        self.g11 = float(g11)
        self.h = self.eps / 50.0 if h is None else float(h)

    def check_window(self, *xs):
        slack = self.eps * (1.0 + 1e-12)
        for x in xs:
            if abs(x - self.x0) > slack:
                raise DomainError(f"point {x} outside the window |x - {self.x0}| <= {self.eps}")

    def mu(self, x1, x2):
        return math.sqrt(self.g11) * abs(x2 - x1)

    def tau(self, x1, x2):
        x1, x2 = float(x1), float(x2)
        self.check_window(x1, x2)
        if x1 == x2:
            return 0.0
        return self._tau(x1, x2)

    def rho(self, x1, x2):
        return self.tau(x1, x2) ** 2

    def _tau(self, x1, x2):
        raise NotImplementedError

    def window_points(self, n):
        return self.x0 + self.eps * np.linspace(-1.0, 1.0, n)


class OracleDataset(BoundaryDistanceDataset):
    """tau computed on demand from chords of a known strip; chord solves are memoised."""

    source = "oracle"

    def __init__(self, m, x0=0.0, eps=None, h=None):
        m = _as_metric(m)
        eps = 0.05 * m.L if eps is None else eps
        super().__init__(x0, eps, float(m.warp._eval(0.0, 0)), h)
        self.metric = m
        self._chords = {}
        self._lock = threading.Lock()

    def chord(self, x1, x2):
        """Chord joining x1 -> x2, or None where no interior chord exists."""
        key = (float(x1), float(x2))
        with self._lock:
            if key in self._chords:
                return self._chords[key]
        try:
            ch = chord_between(self.metric, key[0], key[1])
        except LensJetError:
            ch = None
        with self._lock:
            # first writer wins so every reader sees the same value
            return self._chords.setdefault(key, ch)

    def _tau(self, x1, x2):
        # the chord solver works from the separation only; order the pair so
        # tau(x1, x2) and tau(x2, x1) share one solve and agree exactly
        a, b = (x1, x2) if x1 <= x2 else (x2, x1)
        ch = self.chord(a, b)
        mu = self.mu(a, b)
        return mu if ch is None else min(ch.length, mu)

    def cache_size(self):
        with self._lock:
            return len(self._chords)


class TabulatedDataset(BoundaryDistanceDataset):
    """tau read from a uniform grid; rho = tau^2 is interpolated by a bicubic spline."""

    source = "tabulated"

    def __init__(self, grid, tau_table, x0, eps, g11, h=None):
        super().__init__(x0, eps, g11, h)
        grid = np.asarray(grid, dtype=float)
        tau_table = np.asarray(tau_table, dtype=float)
        if tau_table.shape != (len(grid), len(grid)):
            raise ValueError("tau table must be square over the grid")
        steps = np.diff(grid)
        if len(grid) < 4 or np.any(steps <= 0) or np.ptp(steps) > 1e-9 * steps[0]:
            raise ValueError("tabulated grid must be uniform and increasing with at least 4 points")
        if steps[0] > self.h / 4.0 * (1.0 + 1e-9):
            raise ValueError(f"grid spacing {steps[0]} exceeds h/4 = {self.h / 4.0}")
        if grid[0] > self.x0 - self.eps + 1e-12 or grid[-1] < self.x0 + self.eps - 1e-12:
            raise ValueError("tabulated grid does not cover the window")
        self.grid = grid
        self.table = tau_table
        self._spline = RectBivariateSpline(grid, grid, tau_table**2, kx=3, ky=3, s=0)

    def _tau(self, x1, x2):
        r = float(self._spline(x1, x2, grid=False))
        return math.sqrt(max(r, 0.0))

    @classmethod
    def from_oracle(cls, ds, spacing=None):
        """Tabulate an oracle dataset over its window at spacing <= h/4.

        Strip chords depend only on the separation, so each offset is solved once.
        """
        spacing = ds.h / 4.0 if spacing is None else spacing
        n = int(math.ceil(2.0 * ds.eps / spacing)) + 1
        grid = ds.x0 + np.linspace(-ds.eps, ds.eps, n)
        step = grid[1] - grid[0]
        offsets = np.arange(n) * step
        by_offset = np.array([ds.tau(ds.x0 - ds.eps, ds.x0 - ds.eps + d) if d > 0 else 0.0 for d in offsets])
        idx = np.abs(np.arange(n)[:, None] - np.arange(n)[None, :])
        return cls(grid, by_offset[idx], ds.x0, ds.eps, ds.g11, ds.h)

    def to_csv(self, path):
        """Write ``x1,x2,tau`` rows plus the JSON sidecar carrying x0, eps and g11."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x1", "x2", "tau"])
            for i, a in enumerate(self.grid):
                for j, b in enumerate(self.grid):
                    w.writerow([f"{a:.17g}", f"{b:.17g}", f"{self.table[i, j]:.17g}"])
        sidecar_path(path).write_text(json.dumps({"x0": self.x0, "eps": self.eps, "g11": self.g11}, sort_keys=True))

    @classmethod
    def from_csv(cls, path, h=None):
        path = Path(path)
        meta = json.loads(sidecar_path(path).read_text())
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        grid = np.unique(data[:, 0])
        n = len(grid)
        if len(data) != n * n or not np.array_equal(np.unique(data[:, 1]), grid):
            raise ValueError("CSV rows must cover the full grid x grid product")
        order = np.lexsort((data[:, 1], data[:, 0]))
        table = data[order, 2].reshape(n, n)
        return cls(grid, table, meta["x0"], meta["eps"], meta["g11"], h)


def sidecar_path(path):
    path = Path(path)
    return path.with_name(path.stem + ".json")


# --- derivative queries ------------------------------------------------------


def detect_nonconcave(ds, tol=1e-12, n=9):
    """Evidence of a convex boundary direction: some pair in the window with mu - tau > tol."""
    pts = ds.window_points(n)
    for i in range(n):
        for j in range(i + 1, n):
            if ds.mu(pts[i], pts[j]) - ds.tau(pts[i], pts[j]) > tol:
                return NONCONCAVE
    return NO_EVIDENCE


def fd_partial(ds, x, y, orders, h=None, target="tau"):
    """Tangential derivative d^a/dx1^a d^b/dy1^b of tau or rho at (x, y).

    ``orders`` = (a, b) with a, b in {0, 1, 2}; each slot is differenced
    centrally with two-level Richardson extrapolation.
    """
    h = ds.h if h is None else h
    a, b = orders
    base = ds.tau if target == "tau" else ds.rho if target == "rho" else None
    if base is None:
        raise ValueError("target must be 'tau' or 'rho'")
    if a not in (0, 1, 2) or b not in (0, 1, 2):
        raise ValueError("tangential orders limited to 0..2 per slot")

    def in_y(xx):
        if b == 0:
            return base(xx, y)
        return richardson_central(lambda yy: base(xx, yy), y, h, b)

    if a == 0:
        return in_y(x)
    return richardson_central(in_y, x, h, a)


def tangential_tau(ds, x, y, h=None):
    """d tau / dx1 at (x, y) by Richardson-extrapolated central differences."""
    return fd_partial(ds, x, y, (1, 0), h)


def normal_from_tangential(ds, p, g11=None):
    """Inward normal derivative from the tangential one through the Eikonal equation."""
    g11 = ds.g11 if g11 is None else g11
    rest = 1.0 - p * p / g11
    if rest <= TRANSVERSAL_TOL:
        raise NonTransversalError(f"1 - g^11 (d1 tau)^2 = {rest:.3g}: chord tangent to the boundary")
    return -math.sqrt(rest)


def normal_derivative_tau(ds, x, y, h=None):
    """d tau / d x_n at boundary points x != y (x_n the inward normal coordinate of the first point)."""
    if x == y:
        raise DomainError("normal derivative needs distinct points")
    return normal_from_tangential(ds, tangential_tau(ds, x, y, h))


def eikonal_residual(ds, x, y, h=None):
    """g^11 (d1 tau)^2 + (dn tau)^2 - 1 with d1 tau by finite differences and dn tau from the chord.

    Oracle datasets only: the chord's Clairaut constant c gives the exact
    unit covector (c, -sqrt(1 - c^2/g11)) at the first endpoint.
    """
    if not isinstance(ds, OracleDataset):
        raise TypeError("Eikonal residual needs the chord oracle")
    a, b = (x, y) if x <= y else (y, x)
    ch = ds.chord(a, b)
    if ch is None:
        return None
    p = tangential_tau(ds, x, y, h)
    return (p * p - ch.c * ch.c) / ds.g11


def rho_hessian_gap(ds, h):
    """Second difference of rho(x, x0) at x0 minus 2 g11."""
    x0 = ds.x0
    return central(lambda x: ds.rho(x, x0), x0, h, 2) - 2.0 * ds.g11
