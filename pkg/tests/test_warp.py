from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lensjet.errors import DerivativeOrderError, DomainError
from lensjet.warp import (
    BOTTOM,
    TOP,
    ExpressionWarp,
    JetVector,
    ReflectedWarp,
    SampledWarp,
    christoffel,
    ground_truth_jet,
    jet_compare,
    load_warp,
    metric_components,
    preset,
    second_fundamental_form,
    warp_from_json,
)


def test_metric_components_examples():
    assert metric_components(preset("flat"), 0.3) == (1.0, 0.0, 1.0)
    assert metric_components(preset("cos1"), math.pi / 2) == pytest.approx((2.0, 0.0, 1.0), abs=1e-15)
    assert metric_components(preset("cos2"), math.pi / 2) == pytest.approx((3.0, 0.0, 1.0), abs=1e-15)


def test_out_of_domain_rejected():
    with pytest.raises(DomainError):
        metric_components(preset("cos1"), -0.1)
    with pytest.raises(DomainError):
        christoffel(preset("exp-decay"), 1.5)


def test_christoffel_examples():
    c = christoffel(preset("flat"), 1.0)
    assert (c.g2_11, c.g1_12) == (0.0, 0.0)
    c = christoffel(preset("cos1"), math.pi / 2)
    assert c.g2_11 == pytest.approx(-0.5, abs=1e-15)
    assert c.g1_12 == pytest.approx(0.25, abs=1e-15)
    c = christoffel(preset("cos2"), 0.0)
    assert (c.g2_11, c.g1_12) == (0.0, 0.0)
    assert c.g1_11 == c.g1_22 == c.g2_12 == c.g2_22 == 0.0


@settings(max_examples=60, deadline=None)
@given(name=st.sampled_from(["cos1", "cos2", "exp-decay", "tanh-decay", "quad-decay"]), t=st.floats(0.0, 1.0))
def test_christoffel_identities(name, t):
    w = preset(name)
    y = t * w.L
    c = christoffel(w, y)
    f, df = w(y), w.deriv(y, 1)
    assert c.g1_12 * 2.0 * f == pytest.approx(df, rel=1e-14, abs=1e-15)
    assert c.g2_11 * -2.0 == pytest.approx(df, rel=1e-15, abs=1e-300)


def test_second_fundamental_form_examples(sec5_pair):
    assert second_fundamental_form(preset("flat"), BOTTOM) == 0.0
    assert second_fundamental_form(preset("flat"), TOP) == 0.0
    assert second_fundamental_form(preset("cos1"), BOTTOM) == pytest.approx(0.0, abs=1e-15)
    assert second_fundamental_form(sec5_pair[0].f1, BOTTOM) == pytest.approx(-0.5, abs=1e-12)
    assert second_fundamental_form(preset("exp-decay"), BOTTOM) == pytest.approx(0.5)


def test_ground_truth_jet_examples():
    assert ground_truth_jet(preset("cos1"), BOTTOM, 2).values == pytest.approx((1.0, 0.0, 1.0), abs=1e-15)
    assert ground_truth_jet(preset("cos2"), BOTTOM, 2).values == pytest.approx((1.0, 0.0, 4.0), abs=1e-15)
    for side in (BOTTOM, TOP):
        assert ground_truth_jet(preset("flat"), side, 3).values == (1.0, 0.0, 0.0, 0.0)


@pytest.mark.parametrize("name", ["cos1", "cos2", "exp-decay", "quad-decay", "tanh-decay"])
def test_top_side_sign_convention(name):
    w = preset(name)
    assert ground_truth_jet(w, TOP, 1).values[1] == -w.deriv(w.L, 1)


def test_sampled_jet_order_capped():
    w = SampledWarp(np.linspace(0, 1, 50), np.exp(-np.linspace(0, 1, 50)))
    with pytest.raises(DerivativeOrderError):
        ground_truth_jet(w, BOTTOM, 3)


def test_jet_compare_examples(sec5_pair):
    j1 = ground_truth_jet(preset("cos1"), BOTTOM, 2)
    j2 = ground_truth_jet(preset("cos2"), BOTTOM, 2)
    assert jet_compare(j1, j2, 1e-9) == 2
    assert jet_compare(j1, j1, 1e-9) is None
    profile, f2 = sec5_pair
    assert jet_compare(ground_truth_jet(profile.f1, BOTTOM, 2), ground_truth_jet(f2, BOTTOM, 2), 1e-4) == 1
    with pytest.raises(ValueError):
        jet_compare(j1, JetVector(BOTTOM, (1.0, 0.0)), 1e-9)


@pytest.mark.parametrize("name", ["cos1", "exp-decay", "tanh-decay"])
def test_sampled_reproduces_analytic(name):
    w = preset(name)
    ys = np.linspace(0.0, w.L, 1024)
    s = SampledWarp(ys, w(ys), L=w.L)
    inner = ys[2:-2]
    mid = 0.5 * (ys[2:-3] + ys[3:-2])
    assert np.max(np.abs(s(mid) - w(mid))) <= 1e-8
    assert np.max(np.abs(s.deriv(inner, 1) - w.deriv(inner, 1))) <= 1e-5


def test_sampled_validation():
    with pytest.raises(ValueError):
        SampledWarp([0.0, 0.5, 0.4, 1.0, 1.2], [1, 1, 1, 1, 1])
    with pytest.raises(ValueError):
        SampledWarp(np.linspace(0.1, 1, 10), np.ones(10), L=1.0)
    with pytest.raises(DomainError):
        SampledWarp(np.linspace(0, 1, 10), np.r_[np.ones(9), -1.0])


def test_expression_any_order():
    w = preset("exp-decay")
    for k in range(6):
        assert w.deriv(0.0, k) == pytest.approx((-1.0) ** k, abs=1e-15)


def test_reflected_warp():
    w = preset("exp-decay")
    r = ReflectedWarp(w)
    assert r(0.25) == pytest.approx(w(0.75))
    assert r.deriv(0.25, 1) == pytest.approx(-w.deriv(0.75, 1))


def test_json_round_trip(tmp_path):
    w = ExpressionWarp("1 + y**2", 2.0, name="parab")
    again = warp_from_json(w.to_json())
    assert again(1.5) == w(1.5)
    s = SampledWarp(np.linspace(0, 1, 20), 1 + np.linspace(0, 1, 20) ** 2)
    p = tmp_path / "s.json"
    import json

    p.write_text(json.dumps(s.to_json()))
    assert load_warp(str(p))(0.37) == s(0.37)
    assert load_warp("cos1") is preset("cos1")
    with pytest.raises(ValueError):
        load_warp("no-such-thing")


def test_fixed_width_presets():
    with pytest.raises(ValueError):
        preset("cos1", 3.0)
    assert preset("exp-decay", 2.0).L == 2.0
