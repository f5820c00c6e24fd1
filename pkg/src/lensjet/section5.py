"""A lens-equivalent pair of strips (L = 14) whose boundaries have different second fundamental forms.

``build_f1`` produces a concrete smooth profile rising linearly from 1 at
the boundary, peaking symmetrically at x = 3, decaying flatly to 1 at x = 6
and mirrored about x = 7.  ``build_f2`` rearranges each level set of f1 on
[0, 6] into a single interval centred at 3; the result has the same
sublevel measures but is flat at the boundary.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import expit

from .errors import ConstraintViolation, DomainError, RootFindingError
from .fd import one_sided_slope
from .lens import build_lens_table, compare_lens, default_direction_grid, equimeasurable_check, level_grid
from .warp import BOTTOM, SampledWarp, WarpFunction, ground_truth_jet, jet_compare

L14 = 14.0
DEFAULT_PEAK = 3.25
SLOPE_STEP = 1e-3


def smooth_step(t, k=0):
    """C-infinity step exp(-1/t) / (exp(-1/t) + exp(-1/(1-t))) and its first two derivatives.

    Written as expit(1/(1-t) - 1/t) so neither tail underflows prematurely.
    """
    t = np.asarray(t, dtype=float)
    inner = (t > 0.0) & (t < 1.0)
    tc = np.where(inner, t, 0.5)
    z = 1.0 / tc - 1.0 / (1.0 - tc)
    s = expit(-z)
    if k == 0:
        return np.where(t >= 1.0, 1.0, np.where(inner, s, 0.0))
    sc = s * expit(z)
    q = 1.0 / tc**2 + 1.0 / (1.0 - tc) ** 2
    if k == 1:
        return np.where(inner, sc * q, 0.0)
    if k == 2:
        dq = -2.0 / tc**3 + 2.0 / (1.0 - tc) ** 3
        ds = sc * q
        return np.where(inner, ds * (1.0 - 2.0 * s) * q + sc * dq, 0.0)
    raise ValueError("smooth_step derivatives implemented to order 2")


def _step_complement(t):
    """1 - smooth_step(t), computed without cancellation."""
    t = np.asarray(t, dtype=float)
    inner = (t > 0.0) & (t < 1.0)
    tc = np.where(inner, t, 0.5)
    return np.where(t <= 0.0, 1.0, np.where(inner, expit(1.0 / tc - 1.0 / (1.0 - tc)), 0.0))


class Section5F1(WarpFunction):
    """Piecewise-defined smooth f1 on [0, 14].

    [0,1] x+1;  [1,2] blend of x+1 into the cap;  [2,4] cap P - a(x-3)^2;
    [4,6] cap blended flatly into 1;  [6,7] 1;  [7,14] mirror image.
    With a = P - 3 the cap meets 3 at x = 2 and 4 and the blends stay
    monotone for 3 < P <= 27/8.
    """

    kind = "preset"
    name = "sec5-f1"
    max_order = 2
    breakpoints = (1.0, 2.0, 4.0, 6.0, 7.0, 8.0, 10.0, 12.0, 13.0)

    def __init__(self, peak=DEFAULT_PEAK):
        self.L = L14
        self.peak = float(peak)
        self.curvature = self.peak - 3.0

    def _cap(self, x, k):
        P, a = self.peak, self.curvature
        if k == 0:
            return P - a * (x - 3.0) ** 2
        if k == 1:
            return -2.0 * a * (x - 3.0)
        return np.full_like(x, -2.0 * a)

    def _half(self, x, k):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        A = [x + 1.0, np.ones_like(x), np.zeros_like(x)]
        B = [self._cap(x, j) for j in range(3)]
        rise = (x >= 1.0) & (x < 2.0)
        cap = (x >= 2.0) & (x <= 4.0)
        fall = (x > 4.0) & (x < 6.0)
        if k == 0:
            out = np.where(x < 1.0, A[0], out)
            s = smooth_step(x - 1.0)
            out = np.where(rise, A[0] + s * (B[0] - A[0]), out)
            out = np.where(cap, B[0], out)
            out = np.where(fall, 1.0 + _step_complement((x - 4.0) / 2.0) * (B[0] - 1.0), out)
            return np.where(x >= 6.0, 1.0, out)
        s = [smooth_step(x - 1.0, j) for j in range(k + 1)]
        g = [B[j] - A[j] for j in range(3)]
        if k == 1:
            rise_val = A[1] + s[1] * g[0] + s[0] * g[1]
        else:
            rise_val = A[2] + s[2] * g[0] + 2.0 * s[1] * g[1] + s[0] * g[2]
        u = (x - 4.0) / 2.0
        w = [_step_complement(u), -0.5 * smooth_step(u, 1), -0.25 * smooth_step(u, 2)]
        h = [B[0] - 1.0, B[1], B[2]]
        if k == 1:
            fall_val = w[1] * h[0] + w[0] * h[1]
        else:
            fall_val = w[2] * h[0] + 2.0 * w[1] * h[1] + w[0] * h[2]
        out = np.where(x < 1.0, A[k], out)
        out = np.where(rise, rise_val, out)
        out = np.where(cap, B[k], out)
        return np.where(fall, fall_val, out)

    def _eval(self, y, k):
        y = np.asarray(y, dtype=float)
        mirrored = y > 7.0
        x = np.where(mirrored, L14 - y, y)
        val = self._half(x, k)
        if k % 2:
            val = np.where(mirrored, -val, val)
        return float(val) if val.ndim == 0 else val

    def to_json(self):
        return {"kind": "preset", "name": "sec5-f1"}


@dataclass(frozen=True)
class Section5Profile:
    peak: float
    curvature: float
    f1: Section5F1


def check_f1_constraints(f1, n=4001):
    """Re-check every clause of the constraint list on sample points; raise on the first failure.

    f1' < 0 on (3, 6) is checked strictly up to 6 - 1e-2; closer to 6 the
    flat contact makes f1' underflow, so only f1' <= 0 is enforced there.
    """
    t = np.linspace(0.0, 1.0, n)
    gap = np.max(np.abs(f1._eval(t, 0) - (t + 1.0)))
    if gap > 1e-12:
        raise ConstraintViolation("f1(x) = x + 1 on [0, 1]", f"gap {gap:.3g}")
    rise = np.linspace(1.0, 3.0, n)[:-1]
    if np.any(f1._eval(rise, 1) <= 0):
        raise ConstraintViolation("f1' > 0 on [1, 3)")
    if abs(f1._eval(3.0, 1)) > 1e-12:
        raise ConstraintViolation("f1'(3) = 0")
    sym = np.max(np.abs(f1._eval(3.0 + t, 0) - f1._eval(3.0 - t, 0)))
    if sym > 1e-12:
        raise ConstraintViolation("f1(3 + t) = f1(3 - t) on [0, 1]", f"gap {sym:.3g}")
    fall = np.linspace(3.0, 6.0, n)[1:-1]
    dfall = f1._eval(fall, 1)
    if np.any(dfall > 0) or np.any(dfall[fall <= 6.0 - 1e-2] >= 0):
        raise ConstraintViolation("f1' < 0 on (3, 6)")
    flat = np.linspace(6.0, 7.0, n)
    if np.any(f1._eval(flat, 0) != 1.0):
        raise ConstraintViolation("f1 = 1 on [6, 7]")
    t7 = np.linspace(0.0, 7.0, n)
    mirror = np.max(np.abs(f1._eval(7.0 + t7, 0) - f1._eval(7.0 - t7, 0)))
    if mirror > 1e-12:
        raise ConstraintViolation("f1(7 + t) = f1(7 - t) on [0, 7]", f"gap {mirror:.3g}")


def build_f1(peak=DEFAULT_PEAK):
    if not 3.0 < peak <= 27.0 / 8.0:
        raise ConstraintViolation("peak in (3, 27/8]", f"got {peak}")
    f1 = Section5F1(peak)
    check_f1_constraints(f1)
    return Section5Profile(peak=f1.peak, curvature=f1.curvature, f1=f1)


def _bisect(fn, target, lo, hi, increasing, iters=64):
    """Vectorised bisection for fn(x) = target on [lo, hi] (monotone fn)."""
    lo = np.broadcast_to(np.asarray(lo, dtype=float), np.shape(target)).copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=float), np.shape(target)).copy()
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        below = fn(mid) < target if increasing else fn(mid) >= target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def branch_inverses(p, y):
    """(l(y), r(y)): where the rising branch on [0, 3] reaches y and the falling branch on [3, 6] leaves it."""
    f1 = p.f1
    y = np.asarray(y, dtype=float)
    f = lambda x: f1._eval(x, 0)  # noqa: E731
    left = np.where(y <= 1.0, 0.0, _bisect(f, y, 0.0, 3.0, increasing=True))
    right = np.where(y <= 1.0, 6.0, _bisect(f, y, 3.0, 6.0, increasing=False))
    top = y >= p.peak
    return np.where(top, 3.0, left), np.where(top, 3.0, right)


def layer_width(p, y):
    """H(y) = measure of {x in [0, 6] : f1(x) >= y} for 1 <= y <= P."""
    arr = np.asarray(y, dtype=float)
    if np.any(arr < 1.0 - 1e-12) or np.any(arr > p.peak + 1e-12):
        raise DomainError(f"layer width defined for levels in [1, {p.peak}]")
    left, right = branch_inverses(p, arr)
    out = right - left
    return float(out) if out.ndim == 0 else out


def build_f2(p, n_samples=3001):
    """Central rearrangement of f1, returned as a sampled profile on [0, 14].

    On [0, 3) f2(x) is the level y with H(y) = 6 - 2x; then f2(3) = f1(3),
    mirror about 3, constant 1 on [6, 7], mirror about 7.
    """
    if n_samples < 256:
        raise ValueError("n_samples must be at least 256")
    xs = np.linspace(0.0, 3.0, n_samples)
    target = 6.0 - 2.0 * xs[:-1]
    H = lambda y: layer_width(p, y)  # noqa: E731
    ys = _bisect(H, target, 1.0, p.peak, increasing=False)
    ys = np.where(xs[:-1] == 0.0, 1.0, ys)
    check = np.abs(H(ys) - target)
    # next to x = 0 the flat contact of f1 at 6 puts the target level below
    # double resolution of 1; those samples are 1 to within 1e-9 anyway
    resolvable = (np.diff(np.r_[ys, p.peak]) > 0) & (ys > 1.0 + 1e-9)
    if np.any(np.diff(ys) < 0) or np.any(check[resolvable] > 1e-6):
        raise RootFindingError("layer width is not monotone; f1 is not a valid profile")
    half_x = np.r_[xs[:-1], 3.0, 6.0 - xs[-2::-1]]
    half_f = np.r_[ys, p.peak, ys[::-1]]
    left_x = np.r_[half_x, 7.0]
    left_f = np.r_[half_f, 1.0]
    full_x = np.r_[left_x, L14 - left_x[-2::-1]]
    full_f = np.r_[left_f, left_f[-2::-1]]
    return SampledWarp(full_x, full_f, L=L14, name="sec5-f2")


@dataclass(frozen=True)
class Section5Report:
    peak: float
    n_levels: int
    equimeasure_gap: float
    equimeasure_level: float
    f1_slope0: float
    f2_slope0: float
    n_directions: int
    lens_T: float
    lens_delta_x: float
    lens_exit_u: float
    jet_first_difference: int | None
    f1_jet0: tuple
    f2_jet0: tuple

    def to_dict(self):
        return asdict(self)


def verify_section5(p, f2, n_levels=256, n_directions=51, threads=1):
    """Equimeasurability, boundary slopes, lens agreement and jet comparison of the pair."""
    f1 = p.f1
    levels = level_grid(1.0, p.peak, n_levels)
    eq = equimeasurable_check(f1, f2, levels=levels)
    s1 = one_sided_slope(lambda x: f1._eval(x, 0), 0.0, SLOPE_STEP)
    s2 = one_sided_slope(lambda x: f2._eval(x, 0), 0.0, SLOPE_STEP)
    grid = default_direction_grid(n_directions)
    t1 = build_lens_table(f1, grid, threads=threads)
    t2 = build_lens_table(f2, grid, threads=threads)
    lens = compare_lens(t1, t2)
    j1 = ground_truth_jet(f1, BOTTOM, 2)
    j2 = ground_truth_jet(f2, BOTTOM, 2)
    return Section5Report(
        peak=p.peak,
        n_levels=n_levels,
        equimeasure_gap=eq.gap,
        equimeasure_level=eq.level,
        f1_slope0=float(s1),
        f2_slope0=float(s2),
        n_directions=n_directions,
        lens_T=lens.T,
        lens_delta_x=lens.delta_x,
        lens_exit_u=lens.exit_u,
        jet_first_difference=jet_compare(j1, j2, 1e-4),
        f1_jet0=j1.values,
        f2_jet0=j2.values,
    )
