"""Recovery of the normal jet of g_11 at a boundary point from localized boundary distance data.

Notation: x = (x1, xn) and y = (y1, yn) are two points, xn and yn their
distances to the boundary.  Q(j, l)(x, y) is d^j/dxn^j d^l/dyn^l tau
evaluated with both points on the boundary; P(p, q) is the tangential
derivative d/dx1 of Q(p, q).  Differentiating the Eikonal equation
g^11 (d1 tau)^2 + (dn tau)^2 = 1 expresses each Q(j, l) through lower
ones, tangential differences of them, and the normal jet of g^11 found so
far.  The k-th jet then comes from W_k = d^k/dt^k rho(x + t n, y + t n),
whose second tangential derivative on the diagonal is 2 d_n^k g_11.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .boundary import (
    NO_EVIDENCE,
    NONCONCAVE,
    OracleDataset,
    detect_nonconcave,
    eikonal_residual,
    normal_derivative_tau,
    normal_from_tangential,
)
from .errors import ConcaveWindowError, DegenerateDirectionsError, DerivativeOrderError, FDUnstableError, LensJetError
from .fd import richardson_central, richardson_table
from .warp import BOTTOM, ground_truth_jet

# order 3 uses eps/50 rather than eps/12: at eps/12 the nested stencils are
# truncation-dominated on every window tried (see the decisions notes)
STEP_DIVISORS = {1: 50.0, 2: 25.0, 3: 50.0}
# separations relative to the largest admissible one: halving through order 2;
# from order 3 on the nested stencils (k levels of step h) must stay far from
# the diagonal, so the separations are kept within a factor 0.6
OUTER_RATIOS = {1: (1.0, 0.5, 0.25), 2: (1.0, 0.5, 0.25)}
HIGH_ORDER_RATIOS = (1.0, 0.8, 0.6)
FD_TOLERANCE = {1: 1e-4, 2: 1e-2, 3: 0.5}
MAX_CONDITION = 1e10


def order_step(ds, k):
    """Tangential step for order k: eps/50, eps/25, eps/50, then eps/25."""
    return ds.eps / STEP_DIVISORS.get(k, 25.0)


def outer_offsets(ds, k, h):
    """Separations s at which the diagonal second derivative is sampled.

    The largest keeps every nested difference (k levels of step h) inside the
    window; the smallest must exceed k h so no stencil reaches the diagonal.
    """
    top = ds.eps - k * h
    ratios = OUTER_RATIOS.get(k, HIGH_ORDER_RATIOS)
    if top * ratios[-1] <= k * h:
        raise FDUnstableError(f"step {h} too large for order {k} in a window of {ds.eps}")
    return [top * r for r in ratios]


@dataclass(frozen=True)
class DiagonalEstimate:
    value: float
    levels: tuple
    offsets: tuple
    step: float


def diagonal_second_derivative(W, x0, offsets, tol, label, extrapolate=True):
    """W''(x0)/2 for W with W(x0) = 0, from D(s) = (W(x0+s) + W(x0-s)) / 2s^2.

    With ``extrapolate`` the D(s) are Romberg-extrapolated in s^2 and the last
    two diagonal entries must agree within ``tol``.  Without it the estimate
    at the largest separation is returned and the spread of all D(s) is checked.
    """
    vals = [(W(x0 + s) + W(x0 - s)) / (2.0 * s * s) for s in offsets]
    if not extrapolate:
        if max(vals) - min(vals) > tol:
            raise FDUnstableError(f"{label}: estimates spread over [{min(vals):.6g}, {max(vals):.6g}]")
        return float(vals[0]), tuple(float(v) for v in vals)
    diag = richardson_table(vals, offsets, power=2)
    if len(diag) > 1 and abs(diag[-1] - diag[-2]) > tol:
        raise FDUnstableError(f"{label}: extrapolation levels disagree ({diag[-2]:.6g} vs {diag[-1]:.6g})")
    return diag[-1], tuple(diag)


def _require_evidence(ds):
    if detect_nonconcave(ds) != NONCONCAVE:
        raise ConcaveWindowError("no chord shorter than the boundary arc: no convex direction in the window")


def _inverse_metric_jet(c):
    """Normal derivatives of g^11 = 1/g_11 from those of g_11 (Leibniz on g^11 g_11 = 1)."""
    G = [1.0 / c[0]]
    for m in range(1, len(c)):
        G.append(-sum(math.comb(m, i) * c[i] * G[m - i] for i in range(1, m + 1)) / c[0])
    return G


def recover_c0(ds, h=None):
    """g_11 at x0 as the limit of (mu(x0, x0 + h)/h)^2."""
    h = ds.h if h is None else h
    x0 = ds.x0
    vals = [(ds.mu(x0, x0 + s) / s) ** 2 for s in (h, h / 2.0, h / 4.0)]
    return richardson_table(vals, (h, h / 2.0, h / 4.0), power=1)[-1]


def recover_c1(ds, g11=None, h=None, tol=None, detail=False):
    """d_n g_11 at x0 from U(s) = (d_xn rho + d_yn rho)(x0 + s, x0)."""
    _require_evidence(ds)
    h = order_step(ds, 1) if h is None else h
    x0 = ds.x0

    def U(x):
        t = ds.tau(x, x0)
        return 2.0 * t * (normal_derivative_tau(ds, x, x0, h) + normal_derivative_tau(ds, x0, x, h))

    offsets = outer_offsets(ds, 1, h)
    tol = FD_TOLERANCE[1] if tol is None else tol
    value, levels = diagonal_second_derivative(U, x0, offsets, tol, "order 1")
    if detail:
        return DiagonalEstimate(value, levels, tuple(offsets), h)
    return value


@dataclass(frozen=True)
class TwoPointNormalData:
    """Normal derivatives of tau and rho = tau^2 at a boundary pair (x, y)."""

    x: float
    y: float
    tau: float
    tau_xn: float
    tau_yn: float
    tau_xnxn: float
    tau_xnyn: float
    tau_ynyn: float

    @property
    def rho_xn(self):
        return 2.0 * self.tau * self.tau_xn

    @property
    def rho_yn(self):
        return 2.0 * self.tau * self.tau_yn

    @property
    def rho_xnxn(self):
        return 2.0 * self.tau_xn**2 + 2.0 * self.tau * self.tau_xnxn

    @property
    def rho_xnyn(self):
        return 2.0 * self.tau_xn * self.tau_yn + 2.0 * self.tau * self.tau_xnyn

    @property
    def rho_ynyn(self):
        return 2.0 * self.tau_yn**2 + 2.0 * self.tau * self.tau_ynyn

    def swapped(self):
        return TwoPointNormalData(
            self.y, self.x, self.tau, self.tau_yn, self.tau_xn, self.tau_ynyn, self.tau_xnyn, self.tau_xnxn
        )


def _first_normal(ds, g11, h):
    def Q10(a, b):
        return normal_from_tangential(ds, richardson_central(lambda t: ds.tau(t, b), a, h, 1), g11)

    return Q10


def second_normal_derivatives(ds, x, y, c1, g11=None, h=None):
    """Solve the once-differentiated Eikonal equations for the second normal derivatives of tau.

    d_xn:  dG P00^2 + 2 G P00 P10 + 2 Q10 Q20 = 0
    d_yn:  2 G P00 P01 + 2 Q10 Q11 = 0   (G = g^11, P = tangential d/dx1)
    Q02 follows from Q20 with the slots exchanged.
    """
    g11 = ds.g11 if g11 is None else g11
    h = order_step(ds, 2) if h is None else h
    G = 1.0 / g11
    dG = -c1 / g11**2
    Q10 = _first_normal(ds, g11, h)

    def P00(a, b):
        return richardson_central(lambda t: ds.tau(t, b), a, h, 1)

    def Q20(a, b):
        p00 = P00(a, b)
        p10 = richardson_central(lambda t: Q10(t, b), a, h, 1)
        return -(dG * p00 * p00 + 2.0 * G * p00 * p10) / (2.0 * Q10(a, b))

    def Q11(a, b):
        p01 = richardson_central(lambda t: Q10(b, t), a, h, 1)
        return -G * P00(a, b) * p01 / Q10(a, b)

    return TwoPointNormalData(
        x=x,
        y=y,
        tau=ds.tau(x, y),
        tau_xn=Q10(x, y),
        tau_yn=Q10(y, x),
        tau_xnxn=Q20(x, y),
        tau_xnyn=Q11(x, y),
        tau_ynyn=Q20(y, x),
    )


def recover_c2(ds, c1, g11=None, h=None, tol=None, detail=False):
    """d_n^2 g_11 at x0 from V(s) = (rho_xnxn + 2 rho_xnyn + rho_ynyn)(x0 + s, x0)."""
    _require_evidence(ds)
    g11 = ds.g11 if g11 is None else g11
    h = order_step(ds, 2) if h is None else h
    x0 = ds.x0

    def V(x):
        d = second_normal_derivatives(ds, x, x0, c1, g11, h)
        return d.rho_xnxn + 2.0 * d.rho_xnyn + d.rho_ynyn

    offsets = outer_offsets(ds, 2, h)
    tol = FD_TOLERANCE[2] if tol is None else tol
    value, levels = diagonal_second_derivative(V, x0, offsets, tol, "order 2")
    if detail:
        return DiagonalEstimate(value, levels, tuple(offsets), h)
    return value


class NormalJetRecursion:
    """Q(j, l) at boundary pairs for arbitrary j + l, given the normal jet of g_11 to order j - 1."""

    def __init__(self, ds, jets, h):
        self.ds = ds
        self.h = h
        self.jets = list(jets)
        self.G = _inverse_metric_jet(self.jets)
        self._memo = {}

    def P(self, p, q, x, y):
        return richardson_central(lambda t: self.Q(p, q, t, y), x, self.h, 1)

    def Q(self, j, l, x, y):
        key = (j, l, x, y)
        if key not in self._memo:
            self._memo[key] = self._compute(j, l, x, y)
        return self._memo[key]

    def _compute(self, j, l, x, y):
        if j == 0 and l == 0:
            return self.ds.tau(x, y)
        if j == 0:
            return self.Q(l, 0, y, x)
        if (j, l) == (1, 0):
            return normal_from_tangential(self.ds, self.P(0, 0, x, y), self.jets[0])
        if j - 1 >= len(self.G):
            raise DerivativeOrderError(f"Q({j},{l}) needs the jet of g_11 to order {j - 1}")
        # d_xn^(j-1) d_yn^l of  G (P00)^2 + (Q10)^2 - 1, without its top-order term
        rest = 0.0
        for i in range(j):
            a = j - 1 - i
            s1 = 0.0
            for p in range(a + 1):
                for q in range(l + 1):
                    s1 += math.comb(a, p) * math.comb(l, q) * self.P(p, q, x, y) * self.P(a - p, l - q, x, y)
            rest += math.comb(j - 1, i) * self.G[i] * s1
        for p in range(j):
            for q in range(l + 1):
                if (p, q) in ((j - 1, l), (0, 0)):
                    continue
                rest += math.comb(j - 1, p) * math.comb(l, q) * self.Q(p + 1, q, x, y) * self.Q(j - p, l - q, x, y)
        return -rest / (2.0 * self.Q(1, 0, x, y))

    def rho(self, i, l, x, y):
        return sum(
            math.comb(i, a) * math.comb(l, b) * self.Q(a, b, x, y) * self.Q(i - a, l - b, x, y)
            for a in range(i + 1)
            for b in range(l + 1)
        )

    def W(self, k, x, y):
        """d^k/dt^k rho at t = 0 with both points pushed inward by t."""
        return sum(math.comb(k, i) * self.rho(i, k - i, x, y) for i in range(k + 1))


def recover_ck(ds, prior, k, h=None, tol=None, detail=False):
    """d_n^k g_11 at x0 given ``prior`` = [d_n^0 g_11, ..., d_n^(k-1) g_11]."""
    if k < 1 or len(prior) < k:
        raise ValueError(f"order {k} needs {k} prior jet values")
    _require_evidence(ds)
    h = order_step(ds, k) if h is None else h
    rec = NormalJetRecursion(ds, prior[:k], h)
    x0 = ds.x0
    offsets = outer_offsets(ds, k, h)
    tol = FD_TOLERANCE.get(k, math.inf) if tol is None else tol
    # errors in the prior jets enter D(s) like 1/s^2, which defeats extrapolation in s^2
    value, levels = diagonal_second_derivative(
        lambda x: rec.W(k, x, x0), x0, offsets, tol, f"order {k}", extrapolate=k <= 2
    )
    if detail:
        return DiagonalEstimate(value, levels, tuple(offsets), h)
    return value


# --- symmetric tensors from quadratic samples ---------------------------------


def recover_symmetric_tensor(samples, n):
    """Symmetric n x n matrix F from samples (v, q) with q = v^T F v, by least squares.

    Unknowns are the n(n+1)/2 upper-triangular entries; off-diagonal ones
    enter each row with factor 2.
    """
    pairs = [(i, j) for i in range(n) for j in range(i, n)]
    if len(samples) < len(pairs):
        raise DegenerateDirectionsError(f"need at least {len(pairs)} samples, got {len(samples)}")
    V = np.array([np.asarray(v, dtype=float) for v, _ in samples])
    if V.shape[1] != n:
        raise ValueError(f"sample vectors must have length {n}")
    q = np.array([float(val) for _, val in samples])
    A = np.stack([V[:, i] * V[:, j] * (1.0 if i == j else 2.0) for i, j in pairs], axis=1)
    cond = np.linalg.cond(A)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise DegenerateDirectionsError(f"design matrix condition number {cond:.3g}")
    coef = np.linalg.lstsq(A, q, rcond=None)[0]
    F = np.zeros((n, n))
    for (i, j), c in zip(pairs, coef):
        F[i, j] = F[j, i] = c
    return F


# --- pipeline ------------------------------------------------------------------


@dataclass
class OrderResult:
    k: int
    value: float
    step: float | None
    truth: float | None = None

    @property
    def abs_err(self):
        return None if self.truth is None else abs(self.value - self.truth)


@dataclass
class JetReport:
    x0: float
    verdict: str
    orders: list = field(default_factory=list)
    eikonal_residual_max: float | None = None
    errors: list = field(default_factory=list)

    @property
    def values(self):
        return [o.value for o in self.orders]

    def to_dict(self):
        return {
            "x0": self.x0,
            "orders": [
                {"k": o.k, "value": o.value, "truth": o.truth, "abs_err": o.abs_err, "step": o.step} for o in self.orders
            ],
            "verdict": self.verdict,
            "eikonal_residual_max": self.eikonal_residual_max,
            "errors": list(self.errors),
        }


def _truths(ds, K):
    if not isinstance(ds, OracleDataset):
        return [None] * (K + 1)
    out = []
    for k in range(K + 1):
        try:
            out.append(ground_truth_jet(ds.metric, BOTTOM, k).values[k])
        except DerivativeOrderError:
            out.append(None)
    return out


def _residual_max(ds, h):
    if not isinstance(ds, OracleDataset):
        return None
    x0 = ds.x0
    worst = 0.0
    for s in outer_offsets(ds, 1, h):
        for x in (x0 - s, x0 + s):
            r = eikonal_residual(ds, x, x0, h)
            if r is not None:
                worst = max(worst, abs(r))
    return worst


def run_pipeline(ds, K=2):
    """Detect a convex direction, then recover orders 0..K; errors stop the recursion and are recorded."""
    if K < 0:
        raise ValueError("K must be non-negative")
    truths = _truths(ds, K)
    verdict = detect_nonconcave(ds)
    report = JetReport(x0=ds.x0, verdict=verdict)
    c0 = recover_c0(ds)
    report.orders.append(OrderResult(0, c0, ds.h, truths[0]))
    if verdict == NO_EVIDENCE or K == 0:
        return report
    jets = [c0]
    try:
        h1 = order_step(ds, 1)
        c1 = recover_c1(ds, g11=c0, h=h1)
        jets.append(c1)
        report.orders.append(OrderResult(1, c1, h1, truths[1]))
        report.eikonal_residual_max = _residual_max(ds, h1)
        if K >= 2:
            h2 = order_step(ds, 2)
            c2 = recover_c2(ds, c1, g11=c0, h=h2)
            jets.append(c2)
            report.orders.append(OrderResult(2, c2, h2, truths[2]))
        for k in range(3, K + 1):
            hk = order_step(ds, k)
            ck = recover_ck(ds, jets, k, h=hk)
            jets.append(ck)
            report.orders.append(OrderResult(k, ck, hk, truths[k]))
    except LensJetError as exc:
        report.errors.append({"tag": exc.tag, "message": str(exc)})
    return report
