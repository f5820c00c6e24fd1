from __future__ import annotations

import math

import numpy as np
import pytest

from lensjet.boundary import (
    NO_EVIDENCE,
    NONCONCAVE,
    OracleDataset,
    TabulatedDataset,
    detect_nonconcave,
    eikonal_residual,
    fd_partial,
    rho_hessian_gap,
    normal_derivative_tau,
    normal_from_tangential,
    tangential_tau,
)
from lensjet.errors import DomainError, NonTransversalError
from lensjet.geodesic import interior_distance
from lensjet.warp import ExpressionWarp, preset


def test_tau_and_mu_basics(exp_ds):
    assert exp_ds.tau(0.01, 0.01) == 0.0
    assert exp_ds.mu(0.0, 0.2) == pytest.approx(0.2)
    assert exp_ds.mu(0.03, -0.01) == exp_ds.mu(-0.01, 0.03)
    wide = OracleDataset(ExpressionWarp("4 - y", 1.0), eps=0.1)
    assert wide.mu(0.0, 0.1) == pytest.approx(0.2, abs=1e-15)


def test_tau_symmetric_and_below_mu(exp_ds):
    pts = exp_ds.window_points(7)
    for a in pts:
        for b in pts:
            t = exp_ds.tau(a, b)
            assert t == exp_ds.tau(b, a)
            assert t <= exp_ds.mu(a, b)
    assert exp_ds.tau(0.0, 0.05) < 0.05


def test_window_enforced(exp_ds):
    with pytest.raises(DomainError):
        exp_ds.tau(0.0, 0.06)


def test_no_chord_gives_mu():
    ds = OracleDataset(preset("flat"), eps=0.1)
    assert ds.chord(0.0, 0.05) is None
    assert ds.tau(0.0, 0.05) == ds.mu(0.0, 0.05)


@pytest.mark.parametrize("name,expected", [("cos1", NO_EVIDENCE), ("flat", NO_EVIDENCE), ("exp-decay", NONCONCAVE)])
def test_detector(name, expected):
    assert detect_nonconcave(OracleDataset(preset(name))) == expected


def test_tangential_equals_clairaut(exp_ds):
    p = tangential_tau(exp_ds, 0.04, 0.0)
    assert abs(p - exp_ds.chord(0.0, 0.04).c) <= 1e-6
    # antisymmetric under reflection about the midpoint
    assert tangential_tau(exp_ds, 0.0, 0.04) == pytest.approx(-p, abs=1e-9)


def test_normal_derivative_range(exp_ds):
    for x in (-0.045, -0.02, 0.01, 0.04):
        v = normal_derivative_tau(exp_ds, x, 0.0)
        assert -1.0 < v < 0.0
    with pytest.raises(DomainError):
        normal_derivative_tau(exp_ds, 0.01, 0.01)


def test_normal_derivative_shooting_oracle(exp_ds):
    w = exp_ds.metric
    x, d = 0.04, 5e-4
    t0 = exp_ds.tau(x, 0.0)
    t1 = interior_distance(w, (x, d), (0.0, 0.0))
    t2 = interior_distance(w, (x, 2 * d), (0.0, 0.0))
    one_sided = (-3 * t0 + 4 * t1 - t2) / (2 * d)
    assert abs(normal_derivative_tau(exp_ds, x, 0.0) - one_sided) <= 1e-5


def test_non_transversal():
    ds = OracleDataset(preset("exp-decay"), eps=0.05)
    with pytest.raises(NonTransversalError):
        normal_from_tangential(ds, 1.0)


def test_eikonal_residual(exp_ds):
    worst = max(abs(eikonal_residual(exp_ds, x, 0.0)) for x in (-0.04, -0.01, 0.02, 0.045))
    assert worst <= 1e-6
    flat = OracleDataset(preset("flat"), eps=0.1)
    assert eikonal_residual(flat, 0.05, 0.0) is None


def test_fd_partial_rho_second_difference(exp_ds):
    val = fd_partial(exp_ds, 0.0, 0.0, (2, 0), target="rho")
    assert abs(val - 2.0 * exp_ds.g11) <= 1e-5
    with pytest.raises(ValueError):
        fd_partial(exp_ds, 0.0, 0.0, (3, 0))
    with pytest.raises(ValueError):
        fd_partial(exp_ds, 0.0, 0.0, (1, 0), target="sigma")


@pytest.mark.parametrize("name", ["exp-decay", "quad-decay"])
def test_rho_hessian_gap_second_order(name):
    ds = OracleDataset(preset(name))
    g1, g2 = rho_hessian_gap(ds, 0.02), rho_hessian_gap(ds, 0.01)
    assert 3.5 <= g1 / g2 <= 4.5


def test_tabulated_round_trip(tmp_path, exp_ds):
    tab = TabulatedDataset.from_oracle(exp_ds)
    for a, b in [(0.0, 0.04), (-0.03, 0.02), (0.05, -0.05)]:
        assert abs(tab.tau(a, b) - exp_ds.tau(a, b)) <= 1e-10
    path = tmp_path / "sub" / "tau.csv"
    tab.to_csv(path)
    assert (tmp_path / "sub" / "tau.json").exists()
    back = TabulatedDataset.from_csv(path)
    assert (back.x0, back.eps, back.g11) == (tab.x0, tab.eps, tab.g11)
    assert back.tau(0.013, -0.02) == pytest.approx(tab.tau(0.013, -0.02), abs=1e-14)


def test_tabulated_validation():
    grid = np.linspace(-0.05, 0.05, 11)
    table = np.abs(grid[:, None] - grid[None, :])
    with pytest.raises(ValueError):
        TabulatedDataset(grid, table, 0.0, 0.05, 1.0)  # too coarse for h/4
    fine = np.linspace(-0.04, 0.04, 401)
    with pytest.raises(ValueError):
        TabulatedDataset(fine, np.abs(fine[:, None] - fine[None, :]), 0.0, 0.05, 1.0)


def test_oracle_cache_is_shared():
    ds = OracleDataset(preset("exp-decay"))
    ds.tau(0.01, 0.03)
    n = ds.cache_size()
    ds.tau(0.03, 0.01)
    assert ds.cache_size() == n
    assert math.isfinite(ds.tau(0.01, 0.03))
