import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from grwlab import fiber as fb
from grwlab import graphgeo as gg
from grwlab import warp as wp
from grwlab.errors import ConfigurationError, GeometryError, UnsupportedFiberError
from grwlab.fields import random_graph_values
from grwlab.identities import convergence_order

from conftest import catalog_warps, constant_graph


def _random_graph(mesh, warp, seed=1, amplitude=0.3, base=0.4):
    v, _, _ = random_graph_values(mesh, warp, seed, amplitude, base)
    return gg.GraphFunction(mesh, warp, v)


@pytest.mark.parametrize("warp,c", catalog_warps())
@pytest.mark.parametrize("kind", ["torus", "sphere"])
def test_slices(kind, warp, c):
    mesh = fb.build_torus((16, 16)) if kind == "torus" else fb.build_sphere(2)
    u = constant_graph(mesh, warp, c)
    h = float(warp.hubble(c))
    assert np.max(np.abs(gg.mean_curvature(u) - h)) <= 1e-10
    assert abs(gg.action_functional(u)) <= 1e-10
    vol = float(warp.f(c)) ** 2 * mesh.total_volume
    assert gg.graph_volume(u) == pytest.approx(vol, rel=1e-12)
    if kind == "torus":
        A = gg.shape_operator(u)
        assert np.max(np.abs(A + h * np.eye(2))) <= 1e-10
        hc = gg.higher_curvatures(u, 2)
        for k in range(3):
            assert np.max(np.abs(hc.H[..., k] - h ** k)) <= 1e-10
        lt, lF = gg.algebraic_laplacians(u)
        assert np.max(np.abs(lt)) <= 1e-10 and np.max(np.abs(lF)) <= 1e-10


def test_cosh_zero_slice_is_maximal(sphere3):
    u = constant_graph(sphere3, wp.cosh(), 0.0)
    assert np.max(np.abs(gg.mean_curvature(u))) == 0.0


def test_sign_convention_future_normal():
    u = constant_graph(fb.build_torus((8, 8)), wp.cosh(), 0.6)
    H = gg.mean_curvature(u)
    assert np.all(H > 0) and np.allclose(H, math.tanh(0.6), rtol=1e-12)


def test_totally_geodesic_slice():
    u = constant_graph(fb.build_torus((8, 8)), wp.constant(1.0), 0.3)
    assert np.max(np.abs(gg.shape_operator(u))) == 0.0


@pytest.mark.parametrize("kind", ["torus", "sphere", "circle"])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_pointwise_invariants(kind, seed):
    mesh = {"torus": fb.build_torus((24, 24)), "sphere": fb.build_sphere(2),
            "circle": fb.build_circle(64)}[kind]
    w = wp.exponential()
    u = _random_graph(mesh, w, seed)
    geo = gg.graph_geometry(u)
    assert np.all(geo.lam > 0)
    assert np.all(geo.nu <= -1.0)
    flat = geo.grad2 == 0
    assert np.all(geo.nu[flat] == -1.0)
    assert np.all(geo.nu[~flat] < -1.0)
    assert np.allclose(geo.lam ** 2 + geo.grad2, geo.f ** 2, rtol=1e-13, atol=0)
    assert np.max(np.abs(geo.normal_norm() + 1)) <= 1e-12
    if geo.metric is not None:
        assert np.all(np.linalg.eigvalsh(geo.metric) > 0)


def test_mean_curvature_matches_trace_of_shape_operator():
    w = wp.exponential()
    mesh = fb.build_torus((32, 32))
    v, a, fld = random_graph_values(mesh, w, 3, 0.3, 0.5)
    hs, errs = [], []
    for _ in range(3):
        u = gg.GraphFunction(mesh, w, 0.5 + a * fld(mesh))
        A = gg.shape_operator(u)
        Htr = -np.trace(A, axis1=1, axis2=2) / 2
        errs.append(np.max(np.abs(gg.mean_curvature(u, "strong") - Htr)))
        hs.append(mesh.h)
        mesh = mesh.refine()
    assert convergence_order(hs, errs) >= 1.9
    hc = gg.higher_curvatures(u, 2)
    assert np.max(np.abs(hc.H[..., 1] - Htr)) <= 1e-13


def test_circle_maximal_curve_oracle():
    hs, errs = [], []
    for N in (64, 128, 256):
        mesh = fb.build_circle(N)
        x = mesh.points[:, 0]
        u = gg.GraphFunction(mesh, wp.constant(1.0), 0.3 * np.sin(x))
        up, upp = 0.3 * np.cos(x), -0.3 * np.sin(x)
        exact = upp / (1 - up ** 2) ** 1.5
        errs.append(np.max(np.abs(gg.mean_curvature(u, "strong") - exact)))
        hs.append(mesh.h)
    assert convergence_order(hs, errs) >= 1.9


def test_graph_volume_refined_oracle():
    ref, _ = quad(lambda x: math.sqrt(1 - 0.04 * math.cos(x) ** 2), 0, 2 * math.pi,
                  epsabs=1e-14)
    ref *= 2 * math.pi
    errs, hs = [], []
    for N in (16, 32, 64):
        mesh = fb.build_torus((N, N))
        u = gg.GraphFunction(mesh, wp.constant(1.0), 0.2 * np.sin(mesh.points[:, 0]))
        errs.append(abs(gg.graph_volume(u) - ref))
        hs.append(mesh.h)
    assert convergence_order(hs, errs) >= 1.9


def test_action_refined_oracle():
    def dens(x):
        u = 0.1 * math.sin(x)
        f, du = math.exp(u), 0.1 * math.cos(x)
        return f * math.sqrt(f * f - du * du) - f * f
    ref = 2 * math.pi * quad(dens, 0, 2 * math.pi, epsabs=1e-15)[0]
    errs, hs = [], []
    for N in (16, 32, 64):
        mesh = fb.build_torus((N, N))
        u = gg.GraphFunction(mesh, wp.exponential(), 0.1 * np.sin(mesh.points[:, 0]))
        errs.append(abs(gg.action_functional(u) - ref))
        hs.append(mesh.h)
    assert convergence_order(hs, errs) >= 1.9


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000), kind=st.sampled_from(["torus", "sphere"]))
def test_action_negative_for_nonconstant(seed, kind):
    mesh = fb.build_torus((12, 12)) if kind == "torus" else fb.build_sphere(1)
    u = _random_graph(mesh, wp.cosh(), seed, 0.4, 0.2)
    assert gg.action_functional(u) < 0


def test_maximal_equation_algebraic_laplacian():
    mesh = fb.build_torus((16, 16))
    u = constant_graph(mesh, wp.constant(1.0), 0.7)
    _, lF = gg.algebraic_laplacians(u)
    assert np.max(np.abs(lF)) == 0.0


def test_geometry_error_names_vertex():
    mesh = fb.build_torus((16, 16))
    u = gg.GraphFunction(mesh, wp.constant(1.0), 2.0 * np.sin(mesh.points[:, 0]))
    assert not gg.is_feasible(u)
    with pytest.raises(GeometryError) as exc:
        gg.mean_curvature(u)
    assert exc.value.vertex is not None
    with pytest.raises(GeometryError):
        gg.graph_volume(u)


def test_out_of_domain_is_geometry_error():
    mesh = fb.build_torus((8, 8))
    w = wp.polynomial((1.0, 0.1), (-1.0, 1.0))
    with pytest.raises(GeometryError):
        gg.mean_curvature(constant_graph(mesh, w, 1.5))


def test_graph_function_validation(torus32):
    with pytest.raises(ConfigurationError):
        gg.GraphFunction(torus32, wp.cosh(), np.zeros(5))
    with pytest.raises(ConfigurationError):
        gg.GraphFunction(torus32, wp.cosh(), np.zeros(torus32.n_vertices), margin=1.0)


def test_shape_operator_grid_only(sphere3):
    with pytest.raises(UnsupportedFiberError):
        gg.shape_operator(constant_graph(sphere3, wp.cosh(), 0.1))


def test_higher_curvatures_k_max():
    u = constant_graph(fb.build_torus((8, 8)), wp.cosh(), 0.1)
    with pytest.raises(ConfigurationError):
        gg.higher_curvatures(u, 3)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_trace_identities(n):
    rng = np.random.default_rng(n)
    B = rng.normal(size=(50, n, n))
    A = (B + B.transpose(0, 2, 1)) / 2
    hc = gg.curvature_algebra(A, n)
    assert hc.trace_residual <= 1e-12
    ev = np.linalg.eigvalsh(-A)
    assert np.allclose(hc.sigma[:, n], np.prod(ev, axis=1), atol=1e-12)
    assert np.allclose(hc.H[:, 1], -np.trace(A, axis1=1, axis2=2) / n, atol=1e-13)


def test_newton_constants():
    assert [gg.newton_constant(2, k) for k in range(3)] == [2, 2, 0]
    assert gg.newton_constant(3, 1) == 6


def test_schwarz_defect_nonnegative_and_zero_on_umbilic():
    rng = np.random.default_rng(0)
    B = rng.normal(size=(200, 2, 2))
    A = (B + B.transpose(0, 2, 1)) / 2
    assert np.all(gg.schwarz_defect(A) >= -1e-12)
    assert np.all(gg.schwarz_defect(3.0 * np.broadcast_to(np.eye(2), (4, 2, 2))) == 0)


@pytest.mark.parametrize("seed", [0, 1])
def test_weak_and_strong_forms_agree_on_torus(seed):
    errs = []
    w = wp.exponential()
    mesh = fb.build_torus((32, 32))
    v, a, fld = random_graph_values(mesh, w, seed, 0.3, 0.5)
    for _ in range(3):
        u = gg.GraphFunction(mesh, w, 0.5 + a * fld(mesh))
        errs.append(np.max(np.abs(gg.mean_curvature(u, "strong") - gg.mean_curvature(u, "weak"))))
        mesh = mesh.refine()
    assert errs[0] > errs[1] > errs[2]


def test_resolve_form():
    assert gg.resolve_form(fb.build_sphere(1), "auto") == "weak"
    assert gg.resolve_form(fb.build_torus((8, 8)), "auto") == "strong"
    with pytest.raises(ConfigurationError):
        gg.resolve_form(fb.build_torus((8, 8)), "mixed")
