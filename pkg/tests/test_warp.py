import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from grwlab import fiber as fb
from grwlab import warp as wp
from grwlab.errors import ConfigurationError, DomainError, UnsupportedFiberError

from conftest import catalog_warps


def test_cosh_values():
    w = wp.cosh()
    assert w.f(0.0) == 1.0 and w.fp(0.0) == 0.0 and w.fpp(0.0) == 1.0
    assert w.hubble(0.0) == 0.0
    assert w.hubble(1.0) == pytest.approx(math.tanh(1.0), rel=1e-15)


def test_exponential_hubble_constant():
    w = wp.exponential(2.0, 0.7)
    t = np.linspace(-3, 3, 11)
    assert np.allclose(w.hubble(t), 0.7, rtol=1e-15)
    assert np.allclose(w.log_convexity(t), 0.0, atol=1e-15)


def test_constant_warp():
    w = wp.constant(3.0)
    assert w.f(5.0) == 3.0 and w.fp(5.0) == 0.0 and w.hubble(-2.0) == 0.0


@pytest.mark.parametrize("warp,t", catalog_warps())
def test_hubble_times_f_is_fp(warp, t):
    assert warp.hubble(t) * warp.f(t) == pytest.approx(warp.fp(t), rel=1e-14, abs=1e-300)


@pytest.mark.parametrize("warp,t", catalog_warps())
def test_primitive_matches_quadrature(warp, t):
    a = warp.anchor
    ref, _ = quad(lambda s: float(warp.f(s)), a, t, epsabs=1e-13, epsrel=1e-13)
    assert warp.primitive(t) == pytest.approx(ref, rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("warp,t", catalog_warps())
def test_primitive_increasing(warp, t):
    lo = max(warp.domain[0], -2.0)
    hi = min(warp.domain[1], 2.0)
    s = np.linspace(lo, hi, 400)[1:-1]
    assert np.all(np.diff(warp.primitive(s)) > 0)


def test_primitive_closed_forms():
    assert wp.cosh().primitive(0.7) == pytest.approx(math.sinh(0.7), rel=1e-14)
    assert wp.cosh().primitive(0.0) == 0.0
    assert wp.constant(1.0).primitive(0.4) == pytest.approx(0.4)
    assert wp.exponential().primitive(1.0) == pytest.approx(math.e - 1, rel=1e-14)


def test_domain_errors():
    w = wp.polynomial((1.0, 0.1), (-1.0, 1.0))
    with pytest.raises(DomainError):
        w.f(1.5)
    with pytest.raises(DomainError):
        wp.exponential().f(np.nan)


@pytest.mark.parametrize("kind,params,domain", [
    ("constant", (-1.0,), None),
    ("exponential", (0.0, 1.0), None),
    ("polynomial", (1.0, 0.0, -1.0), (-2.0, 2.0)),
    ("polynomial", (1.0,), (1.0, 0.0)),
    ("nope", (), None),
])
def test_invalid_warps(kind, params, domain):
    with pytest.raises(ConfigurationError):
        wp.build_warp(kind, params, domain)


def test_tabulated_matches_cosh_inside():
    t = np.linspace(-2, 2, 81)
    w = wp.tabulated(t, np.cosh(t))
    s = np.linspace(-1, 1, 17)
    assert np.allclose(w.f(s), np.cosh(s), atol=1e-6)
    assert np.allclose(w.fp(s), np.sinh(s), atol=1e-4)


def test_warp_is_immutable():
    w = wp.cosh()
    with pytest.raises(dataclasses.FrozenInstanceError):
        w.kind = "constant"


@pytest.mark.parametrize("warp,interval,sign", [
    (wp.exponential(), (-1, 1), "non-negative"),
    (wp.cosh(), (-1, 1), "mixed"),
    (wp.cosh(), (0, 1), "non-negative"),
    (wp.cosh(), (-1, 0), "non-positive"),
])
def test_hubble_sign(warp, interval, sign):
    rep = wp.classify_hubble_sign(warp, interval)
    assert rep.sign == sign
    assert rep.samples == wp.DEFAULT_SAMPLES


def test_ncc_examples():
    sph, tor = fb.build_sphere(1), fb.build_torus((8, 8))
    r = wp.ncc_margin(wp.cosh(), sph, (-1, 1))
    assert r.margin == pytest.approx(0.0, abs=1e-12) and r.holds and not r.strict
    r = wp.ncc_margin(wp.exponential(), tor, (-1, 1))
    assert r.margin == pytest.approx(0.0, abs=1e-12) and r.holds
    r = wp.ncc_margin(wp.cosh(), tor, (-1, 1))
    assert r.margin == pytest.approx(-1.0, abs=1e-12) and not r.holds
    with pytest.raises(ConfigurationError):
        wp.ncc_margin(wp.cosh(), tor, (1, 1))


@settings(max_examples=25, deadline=None)
@given(delta=st.floats(0.0, 5.0))
def test_ncc_margin_monotone_in_ricci_lower(delta):
    tor = fb.build_torus((8, 8))
    shifted = dataclasses.replace(tor, ricci_lower=tor.ricci_lower + delta)
    w = wp.polynomial((1.0, 0.1, 0.4), (-2.0, 2.0))
    a = wp.ncc_margin(w, tor, (-1, 1)).margin
    b = wp.ncc_margin(w, shifted, (-1, 1)).margin
    assert b - a == pytest.approx(delta, abs=1e-12)


def test_einstein_constant_on_torus():
    e = wp.einstein_check(wp.constant(1.0), fb.build_torus((8, 8)), (-1, 1))
    assert e.oracle_einstein and e.oracle_ambient_constant == pytest.approx(0.0, abs=1e-12)
    assert e.ratio_residual == pytest.approx(0.0, abs=1e-12)


def test_einstein_de_sitter_routes():
    e = wp.einstein_check(wp.cosh(), fb.build_sphere(1), (-1, 1))
    assert e.oracle_einstein
    assert e.oracle_ambient_constant == pytest.approx(2.0, rel=1e-9)
    assert e.log_route_einstein and e.routes_agree
    assert not e.ratio_holds
    assert any("c/n" in s for s in e.notes)


def test_einstein_exponential_torus():
    e = wp.einstein_check(wp.exponential(), fb.build_torus((8, 8)), (-1, 1))
    assert e.log_identity_residual == pytest.approx(0.0, abs=1e-12)
    assert e.routes_agree


def test_einstein_needs_constant_ricci():
    tor = fb.build_torus((8, 8))
    odd = dataclasses.replace(tor, ricci_constant=None)
    with pytest.raises(UnsupportedFiberError):
        wp.einstein_check(wp.cosh(), odd, (-1, 1))


def test_warped_ricci_slice_of_de_sitter():
    tt, ff = wp.warped_ricci(wp.cosh(), 1.0, 2, np.array([0.3]))
    assert tt[0] == pytest.approx(-2.0, rel=1e-12)
    assert ff[0] == pytest.approx(2.0, rel=1e-12)


def test_to_dict_is_plain():
    d = wp.exponential().to_dict()
    assert d["kind"] == "exponential"
