"""Lens data of strips, lens comparison, and sublevel-set measures."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import GrazingError, GridMismatchError, NoTurningPointError
from .geodesic import (
    GeodesicState,
    chord_same_side,
    crossing_displacement,
    crossing_time,
    integrate_to_boundary,
)
from .warp import BOTTOM, TOP, ReflectedWarp, StripMetric, _as_metric

CSV_HEADER = ("entry_u", "T", "delta_x", "exit_side", "exit_u")


@dataclass(frozen=True)
class LensRecord:
    entry_u: float
    T: float
    delta_x: float
    exit_side: str
    exit_u: float


@dataclass(frozen=True)
class LensTable:
    warp_id: str
    grid: tuple
    records: tuple

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    def to_csv(self, path_or_file):
        if hasattr(path_or_file, "write"):
            _write_rows(path_or_file, self.records)
        else:
            with open(path_or_file, "w", newline="") as fh:
                _write_rows(fh, self.records)

    @classmethod
    def from_csv(cls, path, warp_id="csv"):
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        recs = tuple(
            LensRecord(float(r["entry_u"]), float(r["T"]), float(r["delta_x"]), r["exit_side"], float(r["exit_u"]))
            for r in rows
        )
        return cls(warp_id, tuple(r.entry_u for r in recs), recs)


def _write_rows(fh, records):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow([f"{r.entry_u:.17g}", f"{r.T:.17g}", f"{r.delta_x:.17g}", r.exit_side, f"{r.exit_u:.17g}"])


def default_direction_grid(n=101, bound=0.99):
    """Chebyshev nodes scaled into (-bound, bound), increasing."""
    k = np.arange(n)
    nodes = np.sort(bound * np.cos(math.pi * (2 * k + 1) / (2 * n)))
    nodes[np.abs(nodes) < 1e-15] = 0.0
    return nodes


def _record_quadrature(m, u):
    warp = m.warp
    f0 = float(warp._eval(0.0, 0))
    c = u * f0
    if c * c < warp.extrema[0]:
        return LensRecord(u, crossing_time(m, u), crossing_displacement(m, u), TOP, c / float(warp._eval(m.L, 0)))
    try:
        length, dx = chord_same_side(m, c)
    except NoTurningPointError:
        raise GrazingError(f"u0={u}: neither crossing nor a transversal turning point") from None
    return LensRecord(u, length, dx, BOTTOM, c / f0)


def _record_ode(m, u):
    s0 = GeodesicState.from_clairaut(m, 0.0, 0.0, u * float(m.warp._eval(0.0, 0)))
    ev = integrate_to_boundary(m, s0)
    return LensRecord(u, ev.T, ev.exit_x, ev.exit_side, ev.exit_vx)


def build_lens_table(m, grid=None, method="quadrature", entry_side=BOTTOM, threads=1):
    """One lens record per entry direction; entry at x = 0 on ``entry_side``.

    Entry from y = L is computed on the reflected strip and its exit sides
    mapped back.
    """
    m = _as_metric(m)
    grid = default_direction_grid() if grid is None else np.asarray(grid, dtype=float)
    if np.any(np.diff(grid) <= 0):
        raise ValueError("direction grid must be strictly increasing")
    f0 = float(m.warp._eval(0.0 if entry_side == BOTTOM else m.L, 0))
    if np.any(np.abs(grid) * math.sqrt(f0) >= 1.0):
        raise GrazingError("direction grid reaches tangential entry")
    work = m if entry_side == BOTTOM else StripMetric(ReflectedWarp(m.warp))
    one = {"quadrature": _record_quadrature, "ode": _record_ode}[method]
    items = [float(u) for u in grid]
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            records = list(pool.map(lambda u: one(work, u), items))
    else:
        records = [one(work, u) for u in items]
    if entry_side == TOP:
        flip = {BOTTOM: TOP, TOP: BOTTOM}
        records = [LensRecord(r.entry_u, r.T, r.delta_x, flip[r.exit_side], r.exit_u) for r in records]
    return LensTable(m.warp.name, tuple(items), tuple(records))


class LensDiscrepancy(NamedTuple):
    T: float
    delta_x: float
    exit_u: float


def compare_lens(t1, t2):
    """Sup-norm discrepancies of two tables on the same direction grid."""
    if len(t1.grid) != len(t2.grid) or any(a != b for a, b in zip(t1.grid, t2.grid)):
        raise GridMismatchError("lens tables use different direction grids")
    if any(a.exit_side != b.exit_side for a, b in zip(t1.records, t2.records)):
        return LensDiscrepancy(math.inf, math.inf, math.inf)
    if not t1.records:
        return LensDiscrepancy(0.0, 0.0, 0.0)
    return LensDiscrepancy(
        float(np.max(np.abs(t1.column("T") - t2.column("T")))),
        float(np.max(np.abs(t1.column("delta_x") - t2.column("delta_x")))),
        float(np.max(np.abs(t1.column("exit_u") - t2.column("exit_u")))),
    )


# --- sublevel measures -------------------------------------------------------


def _sample_grid(w, n_grid):
    grid = np.linspace(0.0, w.L, n_grid)
    if w.breakpoints:
        grid = np.union1d(grid, np.asarray(w.breakpoints, dtype=float))
    return grid


def sublevel_measures(w, levels, n_grid=4097, iters=64):
    """Lebesgue measure of {y in [0, L] : f(y) <= r} for each r in ``levels``.

    Sign changes of f - r on a fine grid are isolated and refined by
    vectorised bisection.
    """
    w = _as_metric(w).warp
    levels = np.atleast_1d(np.asarray(levels, dtype=float))
    grid = _sample_grid(w, n_grid)
    vals = np.asarray(w._eval(grid, 0), dtype=float)
    inside = vals[None, :] <= levels[:, None]
    widths = np.diff(grid)
    full = inside[:, :-1] & inside[:, 1:]
    total = full.astype(float) @ widths
    li, ii = np.nonzero(inside[:, :-1] != inside[:, 1:])
    if len(li):
        r = levels[li]
        lo = grid[ii].copy()
        hi = grid[ii + 1].copy()
        left_in = inside[li, ii]
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            mid_in = np.asarray(w._eval(mid, 0), dtype=float) <= r
            same = mid_in == left_in
            lo = np.where(same, mid, lo)
            hi = np.where(same, hi, mid)
        root = 0.5 * (lo + hi)
        part = np.where(left_in, root - grid[ii], grid[ii + 1] - root)
        np.add.at(total, li, part)
    return total


def sublevel_measure(w, r):
    return float(sublevel_measures(w, [r])[0])


def level_grid(lo, hi, n):
    """``n`` equally spaced levels covering [lo, hi], pulled half a step in from each end."""
    step = (hi - lo) / n
    return lo + step * (np.arange(n) + 0.5)


class EquimeasureResult(NamedTuple):
    passed: bool
    gap: float
    level: float


def equimeasurable_check(w1, w2, n_levels=256, tol=1e-8, levels=None):
    """Sup over sampled levels of |m1(r) - m2(r)|."""
    w1 = _as_metric(w1).warp
    w2 = _as_metric(w2).warp
    if abs(w1.L - w2.L) > 1e-12 * max(1.0, w1.L):
        raise ValueError("profiles live on strips of different width")
    if levels is None:
        lo = min(w1.extrema[0], w2.extrema[0])
        hi = max(w1.extrema[1], w2.extrema[1])
        levels = level_grid(lo, hi, n_levels) if hi > lo else np.array([lo])
    gaps = np.abs(sublevel_measures(w1, levels) - sublevel_measures(w2, levels))
    i = int(np.argmax(gaps))
    return EquimeasureResult(bool(gaps[i] <= tol), float(gaps[i]), float(np.asarray(levels)[i]))


def distribution_integral(w, u0, n_levels=10_000):
    """Crossing time as a Stieltjes sum against the distribution of f.

    T = int (1 - c^2/t)^(-1/2) dnu(t), nu(t) = m{f <= t}; the atom at min f
    (plateaus) is included explicitly.
    """
    warp = _as_metric(w).warp
    c = u0 * float(warp._eval(0.0, 0))
    lo, hi = warp.extrema
    if c * c >= lo:
        raise GrazingError(f"u0={u0}: c^2 >= min f")
    edges = np.linspace(lo, hi, n_levels + 1)
    meas = sublevel_measures(warp, edges)
    meas[-1] = warp.L
    mids = 0.5 * (edges[:-1] + edges[1:])
    phi = 1.0 / np.sqrt(1.0 - c * c / mids)
    atom = meas[0] / math.sqrt(1.0 - c * c / lo)
    return float(atom + np.sum(phi * np.diff(meas)))
