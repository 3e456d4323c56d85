"""Geometry of spacelike graphs over a fiber in -dt^2 + f(t)^2 g.

Conventions
-----------
The future-pointing unit normal of the graph of u is

    N = (f/lam) d_t + Du / (f lam),     lam = sqrt(f(u)^2 - |Du|^2),

so nu = g(N, d_t) = -f/lam <= -1.  The shape operator is A X = -D_X N and
H = -trace(A)/n.  Principal curvatures are the eigenvalues kappa_i of -A,
H_k = sigma_k(kappa) / C(n, k), and the Newton transformations follow

    P_0 = I,    P_k = C(n, k) H_k I + A P_{k-1},

which gives trace(P_k) = (n-k) C(n,k) H_k and trace(A P_k) = -(n-k) C(n,k) H_{k+1}.
On a slice u = t0 every kappa_i equals f'(t0)/f(t0).

Two discretizations of H are provided.  ``strong`` evaluates the
divergence-form expression directly (grid backends).  ``weak`` is the
lumped weighted weak form: n f^n m_v (H_v - f'/f) is the exact gradient
of the discrete action, so finite differences of the action reproduce it
to rounding.  ``auto`` picks strong on grids and weak on the sphere.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import fiber as fb
from .errors import ConfigurationError, GeometryError, UnsupportedFiberError

DEFAULT_MARGIN = 0.05


@dataclass(frozen=True, eq=False)
class GraphFunction:
    """Vertex values of u on a fiber, paired with a warp and a margin."""

    mesh: fb.FiberMesh
    warp: object
    values: np.ndarray
    margin: float = DEFAULT_MARGIN

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.mesh.n_vertices,):
            raise ConfigurationError(
                f"expected {self.mesh.n_vertices} vertex values, got shape {v.shape}")
        if not 0.0 < self.margin < 1.0:
            raise ConfigurationError(f"spacelike margin must lie in (0, 1), got {self.margin}")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def with_values(self, values, margin=None) -> "GraphFunction":
        return GraphFunction(self.mesh, self.warp, values,
                             self.margin if margin is None else margin)

    @property
    def n(self) -> int:
        return self.mesh.dimension

    def osc(self) -> float:
        return float(self.values.max() - self.values.min())


# --------------------------------------------------------------------------
# pointwise state


def in_domain(warp, values) -> bool:
    lo, hi = warp.domain
    return bool(np.all((values > lo) & (values < hi)))


def spacelike_ratios(u: GraphFunction):
    """|Du|/f(u) at vertices and at gradient sites."""
    mesh, w = u.mesh, u.warp
    Dv = fb.vertex_gradient(mesh, u.values)
    rv = np.sqrt(np.einsum("vc,vc->v", Dv, Dv)) / w.f(u.values)
    us = fb.site_values(mesh, u.values)
    Ds = fb.gradient(mesh, u.values)
    rs = np.sqrt(np.einsum("sc,sc->s", Ds, Ds)) / w.f(us)
    return rv, rs


def is_feasible(u: GraphFunction, margin: float | None = None) -> bool:
    """Inside I and |Du| <= (1 - margin) f(u) at every vertex and site."""
    eps = u.margin if margin is None else margin
    if not np.all(np.isfinite(u.values)) or not in_domain(u.warp, u.values):
        return False
    rv, rs = spacelike_ratios(u)
    return bool(max(rv.max(), rs.max()) <= 1.0 - eps)


def check_spacelike(u: GraphFunction, margin: float | None = None) -> None:
    """Raise :class:`GeometryError` naming the worst vertex on violation."""
    eps = u.margin if margin is None else margin
    if not in_domain(u.warp, u.values):
        lo, hi = u.warp.domain
        bad = int(np.argmax((u.values <= lo) | (u.values >= hi)))
        raise GeometryError(f"u leaves the warp domain at vertex {bad}", vertex=bad)
    rv, rs = spacelike_ratios(u)
    worst_v, worst_s = int(np.argmax(rv)), int(np.argmax(rs))
    if rs[worst_s] > rv[worst_v]:
        vertex, ratio = int(u.mesh.site_interp[worst_s].indices[0]), float(rs[worst_s])
    else:
        vertex, ratio = worst_v, float(rv[worst_v])
    if ratio > 1.0 - eps:
        raise GeometryError(
            f"graph violates |Du| <= (1 - {eps:g}) f(u): ratio {ratio:.6g} near vertex {vertex}",
            vertex=vertex, ratio=ratio)


@dataclass
class _SiteState:
    us: np.ndarray
    Ds: np.ndarray
    f: np.ndarray
    fp: np.ndarray
    grad2: np.ndarray
    lam: np.ndarray


def _site_state(mesh, warp, values) -> _SiteState:
    us = fb.site_values(mesh, values)
    Ds = fb.gradient(mesh, values)
    f, fp = warp.f(us), warp.fp(us)
    g2 = np.einsum("sc,sc->s", Ds, Ds)
    lam2 = f * f - g2
    if np.any(lam2 <= 0):
        s = int(np.argmin(lam2))
        v = int(mesh.site_interp[s].indices[0])
        raise GeometryError(f"graph is not spacelike near vertex {v}", vertex=v)
    return _SiteState(us, Ds, f, fp, g2, np.sqrt(lam2))


def _vertex_state(mesh, warp, values):
    Dv = fb.vertex_gradient(mesh, values)
    f, fp = warp.f(values), warp.fp(values)
    g2 = np.einsum("vc,vc->v", Dv, Dv)
    lam2 = f * f - g2
    if np.any(lam2 <= 0):
        v = int(np.argmin(lam2))
        raise GeometryError(f"graph is not spacelike at vertex {v}", vertex=v)
    return Dv, f, fp, g2, np.sqrt(lam2)


# --------------------------------------------------------------------------
# action, volume and mean curvature


def _action_density(st: _SiteState, n: int):
    return st.f ** (n - 1) * st.lam


def graph_volume(u: GraphFunction) -> float:
    """Volume of the graph, quadrature at the gradient sites."""
    check_spacelike(u)
    st = _site_state(u.mesh, u.warp, u.values)
    return math.fsum(_action_density(st, u.n) * u.mesh.site_weights)


def discrete_action(mesh, warp, values) -> float:
    """Discrete action: sum_s w_s f^{n-1} lam - sum_v m_v f^n."""
    n = mesh.dimension
    st = _site_state(mesh, warp, values)
    a = _action_density(st, n) * mesh.site_weights
    b = warp.f(values) ** n * mesh.vertex_measure
    return math.fsum(np.concatenate([a, -b]).tolist())


def action_functional(u: GraphFunction) -> float:
    check_spacelike(u)
    return discrete_action(u.mesh, u.warp, u.values)


def action_gradient(mesh, warp, values) -> np.ndarray:
    """Exact gradient of :func:`discrete_action` with respect to vertex values."""
    n = mesh.dimension
    st = _site_state(mesh, warp, values)
    w = mesh.site_weights
    fn1 = st.f ** (n - 1)
    d_u = (n - 1) * st.f ** (n - 2) * st.fp * st.lam + fn1 * st.f * st.fp / st.lam
    d_D = -(fn1 / st.lam)[:, None] * st.Ds
    out = mesh.site_interp.T @ (w * d_u)
    for c, G in enumerate(mesh.site_grad):
        out += G.T @ (w * d_D[:, c])
    f, fp = warp.f(values), warp.fp(values)
    return out - mesh.vertex_measure * n * f ** (n - 1) * fp


def _residual_strong(mesh, warp, values):
    if not mesh.is_grid:
        raise UnsupportedFiberError("strong-form mean curvature needs a grid backend")
    n = mesh.dimension
    st = _site_state(mesh, warp, values)
    flux = st.Ds / (n * st.f * st.lam)[:, None]
    div = fb.divergence(mesh, flux)
    _, f, fp, g2, lam = _vertex_state(mesh, warp, values)
    zero = fp / (n * lam) * (n + g2 / f ** 2)
    return div + zero - warp.hubble(values)


def _residual_weak(mesh, warp, values):
    n = mesh.dimension
    f = warp.f(values)
    return action_gradient(mesh, warp, values) / (n * f ** n * mesh.vertex_measure)


def resolve_form(mesh, form: str) -> str:
    if form == "auto":
        return "strong" if mesh.is_grid else "weak"
    if form not in ("strong", "weak"):
        raise ConfigurationError(f"unknown mean-curvature form {form!r}")
    if form == "strong" and not mesh.is_grid:
        raise UnsupportedFiberError("strong-form mean curvature needs a grid backend")
    return form


def prescribed_residual(mesh, warp, values, form: str = "auto") -> np.ndarray:
    """H(u) - f'(u)/f(u) without the margin check (strict spacelikeness only)."""
    form = resolve_form(mesh, form)
    values = np.asarray(values, dtype=float)
    if form == "strong":
        return _residual_strong(mesh, warp, values)
    return _residual_weak(mesh, warp, values)


def mean_curvature(u: GraphFunction, form: str = "auto") -> np.ndarray:
    """Vertex field H(u) with respect to the future-pointing normal."""
    check_spacelike(u)
    r = prescribed_residual(u.mesh, u.warp, u.values, form)
    return r + u.warp.hubble(u.values)


# --------------------------------------------------------------------------
# pointwise frame quantities


@dataclass
class GraphGeometry:
    """Derived per-vertex fields of a spacelike graph.

    ``metric``, ``shape``, ``H_k`` and ``P_k`` are populated on grid
    backends only.
    """

    f: np.ndarray
    fp: np.ndarray
    grad: np.ndarray
    grad2: np.ndarray
    lam: np.ndarray
    nu: np.ndarray
    H: np.ndarray
    normal_t: np.ndarray
    normal_fiber: np.ndarray
    metric: np.ndarray | None = None
    shape: np.ndarray | None = None
    H_k: np.ndarray | None = None
    P_k: list | None = None
    elliptic: np.ndarray | None = None

    def normal_norm(self) -> np.ndarray:
        """g(N, N) assembled from the components; equals -1."""
        return -self.normal_t ** 2 + self.f ** 2 * np.einsum(
            "vc,vc->v", self.normal_fiber, self.normal_fiber)


def induced_metric(u: GraphFunction) -> np.ndarray:
    """g_u = -du du + f(u)^2 g at every vertex (grid backends)."""
    if not u.mesh.is_grid:
        raise UnsupportedFiberError("coordinate induced metric needs a grid backend")
    Dv, f, _, _, _ = _vertex_state(u.mesh, u.warp, u.values)
    n = u.n
    return -np.einsum("vi,vj->vij", Dv, Dv) + (f ** 2)[:, None, None] * np.eye(n)


def graph_geometry(u: GraphFunction, form: str = "auto", k_max: int | None = None) -> GraphGeometry:
    check_spacelike(u)
    mesh, w = u.mesh, u.warp
    Dv, f, fp, g2, lam = _vertex_state(mesh, w, u.values)
    geo = GraphGeometry(
        f=f, fp=fp, grad=Dv, grad2=g2, lam=lam, nu=-f / lam,
        H=mean_curvature(u, form),
        normal_t=f / lam,
        normal_fiber=Dv / (f * lam)[:, None],
    )
    if mesh.is_grid:
        geo.metric = induced_metric(u)
        geo.shape = shape_operator(u)
        hc = curvature_algebra(geo.shape, k_max if k_max is not None else u.n)
        geo.H_k, geo.P_k, geo.elliptic = hc.H, hc.P, hc.elliptic
    return geo


def hessian_coords(mesh, values) -> np.ndarray:
    """Central-difference coordinate Hessian at vertices, shape (V, n, n)."""
    if not mesh.is_grid:
        raise UnsupportedFiberError("coordinate Hessian needs a grid backend")
    n = mesh.dimension
    out = np.empty((mesh.n_vertices, n, n))
    for (i, j), D in mesh.hessian.items():
        out[:, i, j] = out[:, j, i] = D @ values
    return out


def shape_operator(u: GraphFunction) -> np.ndarray:
    """Mixed-tensor matrices A^i_j in the coordinate frame e_j = (u_j, d_j).

    Closed form from the warped-product Christoffel symbols
    Gamma^t_ij = f f' delta_ij and Gamma^i_tj = (f'/f) delta^i_j:

        A = -(1/(f lam)) (I + Du Du^T / lam^2) Hess(u) + (f'/lam^3) Du Du^T - (f'/lam) I.
    """
    check_spacelike(u)
    return shape_operator_values(u.mesh, u.warp, u.values)


def shape_operator_values(mesh, warp, values) -> np.ndarray:
    Dv, f, fp, _, lam = _vertex_state(mesh, warp, values)
    Hs = hessian_coords(mesh, values)
    n = mesh.dimension
    eye = np.eye(n)
    uu = np.einsum("vi,vj->vij", Dv, Dv)
    proj = eye + uu / (lam ** 2)[:, None, None]
    A = -np.einsum("vik,vkj->vij", proj, Hs) / (f * lam)[:, None, None]
    A += (fp / lam ** 3)[:, None, None] * uu
    A -= (fp / lam)[:, None, None] * eye
    return A


# --------------------------------------------------------------------------
# higher-order mean curvatures and Newton transformations


@dataclass
class CurvatureAlgebra:
    sigma: np.ndarray        # (..., k_max + 2) elementary symmetric sigma_k of -A
    H: np.ndarray            # (..., k_max + 2) normalized H_k, H_0 = 1
    P: list                  # P_0 .. P_{k_max}
    trace_residual: float    # max |trace(P_k) - c_k H_k|
    elliptic: np.ndarray     # (..., k_max + 1) P_k definite


def newton_constant(n: int, k: int) -> int:
    """c_k = (n - k) C(n, k), the trace constant of P_k."""
    return (n - k) * math.comb(n, k)


def elementary_symmetric(K: np.ndarray, k_max: int) -> np.ndarray:
    """sigma_0..sigma_{k_max} of the eigenvalues of K via Newton's identities."""
    n = K.shape[-1]
    p = []
    Kp = np.broadcast_to(np.eye(n), K.shape).copy()
    for _ in range(k_max):
        Kp = Kp @ K
        p.append(np.trace(Kp, axis1=-2, axis2=-1))
    sig = [np.ones(K.shape[:-2])]
    for k in range(1, k_max + 1):
        acc = np.zeros(K.shape[:-2])
        for i in range(1, k + 1):
            acc = acc + (-1) ** (i - 1) * sig[k - i] * p[i - 1]
        sig.append(acc / k)
    return np.stack(sig, axis=-1)


def curvature_algebra(A: np.ndarray, k_max: int) -> CurvatureAlgebra:
    """H_k and P_k from shape operator matrices of shape (..., n, n)."""
    A = np.asarray(A, dtype=float)
    n = A.shape[-1]
    if not 0 <= k_max <= n:
        raise ConfigurationError(f"k_max must lie in [0, {n}], got {k_max}")
    top = min(k_max + 1, n)
    sig = elementary_symmetric(-A, top)
    if top < k_max + 1:  # sigma_{n+1} = 0
        sig = np.concatenate([sig, np.zeros(sig.shape[:-1] + (1,))], axis=-1)
    binom = np.array([math.comb(n, k) if k <= n else 1 for k in range(k_max + 2)], float)
    H = sig / binom
    eye = np.broadcast_to(np.eye(n), A.shape)
    P = [eye.copy()]
    for k in range(1, k_max + 1):
        P.append(sig[..., k, None, None] * eye + A @ P[-1])
    resid = 0.0
    for k, Pk in enumerate(P):
        tr = np.trace(Pk, axis1=-2, axis2=-1)
        resid = max(resid, float(np.max(np.abs(tr - newton_constant(n, k) * H[..., k]),
                                        initial=0.0)))
    ell = []
    for Pk in P:
        ev = np.linalg.eigvals(Pk).real
        ell.append(np.all(ev > 0, axis=-1) | np.all(ev < 0, axis=-1))
    return CurvatureAlgebra(sig, H, P, resid, np.stack(ell, axis=-1))


def higher_curvatures(u: GraphFunction, k_max: int) -> CurvatureAlgebra:
    if k_max > u.n:
        raise ConfigurationError(f"k_max = {k_max} exceeds the fiber dimension {u.n}")
    return curvature_algebra(shape_operator(u), k_max)


def schwarz_defect(A: np.ndarray) -> np.ndarray:
    """trace(A^2) - n H^2 = trace(A^2) - trace(A)^2 / n, per matrix."""
    n = A.shape[-1]
    tr = np.trace(A, axis1=-2, axis2=-1)
    return np.einsum("...ij,...ji->...", A, A) - tr ** 2 / n


# --------------------------------------------------------------------------
# Laplacian identities


def algebraic_laplacians(u: GraphFunction, form: str = "auto"):
    """Right-hand sides for the Laplacians of tau and of the primitive F(tau).

    Returns ``(lap_tau, lap_F)`` with |grad tau|^2 = |Du|^2 / lam^2.
    """
    check_spacelike(u)
    mesh, w, n = u.mesh, u.warp, u.n
    _, f, fp, g2, lam = _vertex_state(mesh, w, u.values)
    H = mean_curvature(u, form)
    nu = -f / lam
    grad_tau2 = g2 / lam ** 2
    lap_tau = -(fp / f) * (n + grad_tau2) - n * H * nu
    lap_F = -n * fp - n * f * H * nu
    return lap_tau, lap_F


def induced_laplacian(u: GraphFunction, phi) -> np.ndarray:
    """Discrete Laplace-Beltrami of g_u applied to a vertex field.

    (1/sqrt det g_u) div(sqrt det g_u  g_u^{-1} D phi) with sqrt det g_u =
    f^{n-1} lam and g_u^{-1} D phi = (D phi + Du (Du . D phi)/lam^2) / f^2,
    fluxes at the sites and the metric weight at vertices.
    """
    check_spacelike(u)
    mesh, w, n = u.mesh, u.warp, u.n
    st = _site_state(mesh, w, u.values)
    Dphi = fb.gradient(mesh, phi)
    dot = np.einsum("sc,sc->s", st.Ds, Dphi)
    ginv = (Dphi + st.Ds * (dot / st.lam ** 2)[:, None]) / (st.f ** 2)[:, None]
    flux = ginv * (st.f ** (n - 1) * st.lam)[:, None]
    _, f, _, _, lam = _vertex_state(mesh, w, u.values)
    return fb.divergence(mesh, flux) / (f ** (n - 1) * lam)
