"""Discrete compact Riemannian fibers.

Three backends share one representation.  Scalar fields live on vertices
with lumped measures ``vertex_measure``.  Gradients live on *sites* with
quadrature weights ``site_weights``: staggered edges of the periodic grid
(circle, torus) or triangles (sphere).  Every site carries the full
gradient vector, so nonlinear fluxes such as ``Du / (n f(u) lambda)`` can
be formed site by site.

``divergence`` is defined as the negative adjoint of ``gradient`` in the
two discrete inner products, so ``<div V, u> = -<V, grad u>`` holds to
rounding, and ``laplacian = divergence o gradient``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import ConfigurationError, NumericError, UnsupportedFiberError

BACKENDS = ("circle", "torus", "sphere")
MAX_SUBDIVISIONS = 7
MIN_RESOLUTION = 8


@dataclass(frozen=True, eq=False)
class FiberMesh:
    """A discrete compact fiber (F, g) with its metric operators.

    Immutable after construction; all arrays are marked read-only.
    """

    kind: str
    dimension: int
    points: np.ndarray
    vertex_measure: np.ndarray
    site_weights: np.ndarray
    site_interp: sp.csr_matrix
    site_grad: tuple
    vertex_grad: tuple
    total_volume: float
    ricci_lower: float
    ricci_constant: float | None
    shape: tuple | None = None
    lengths: tuple | None = None
    subdivisions: int | None = None
    cells: np.ndarray | None = None
    hessian: dict | None = field(default=None, repr=False)

    def __post_init__(self):
        for name in ("points", "vertex_measure", "site_weights", "cells"):
            arr = getattr(self, name)
            if isinstance(arr, np.ndarray):
                arr.flags.writeable = False

    @property
    def n_vertices(self) -> int:
        return self.vertex_measure.shape[0]

    @property
    def n_sites(self) -> int:
        return self.site_weights.shape[0]

    @property
    def ambient_dim(self) -> int:
        """Number of components of a tangent vector in storage."""
        return len(self.site_grad)

    @property
    def is_grid(self) -> bool:
        return self.kind in ("circle", "torus")

    @property
    def spacing(self) -> tuple | None:
        if self.shape is None:
            return None
        return tuple(L / N for L, N in zip(self.lengths, self.shape))

    @property
    def h(self) -> float:
        """Characteristic mesh size (largest spacing / mean edge length)."""
        if self.is_grid:
            return max(self.spacing)
        tri = self.points[self.cells]
        edges = np.linalg.norm(tri - np.roll(tri, 1, axis=1), axis=2)
        return float(edges.mean())

    @property
    def paper_valid(self) -> bool:
        """False on the 1-D oracle backend, which lies outside n >= 2."""
        return self.dimension >= 2

    def grid(self, field):
        """Reshape a vertex field to the (N1, N2) grid layout."""
        if self.shape is None:
            raise UnsupportedFiberError(f"{self.kind} mesh has no grid layout")
        return np.asarray(field).reshape(self.shape)

    def refine(self) -> "FiberMesh":
        """Return the next mesh of the refinement ladder (factor 2 in h)."""
        if self.kind == "circle":
            return build_circle(2 * self.shape[0], self.lengths[0])
        if self.kind == "torus":
            return build_torus(tuple(2 * N for N in self.shape), self.lengths)
        return build_sphere(self.subdivisions + 1)


# --------------------------------------------------------------------------
# periodic grids


def _shift(N):
    # (S u)[i] = u[i+1], periodic
    return sp.csr_matrix(
        (np.ones(N), (np.arange(N), (np.arange(N) + 1) % N)), shape=(N, N))


def _periodic_ops(N, h):
    I = sp.identity(N, format="csr")
    S = _shift(N)
    fwd = (S - I) / h
    central = (S - S.T) / (2.0 * h)
    second = (S - 2.0 * I + S.T) / h ** 2
    avg = (I + S) * 0.5
    return I, fwd, central, second, avg


def build_circle(resolution: int, length: float = 2 * math.pi) -> FiberMesh:
    """Uniform periodic grid on a circle of the given length (n = 1)."""
    resolution = int(resolution)
    if resolution < MIN_RESOLUTION:
        raise ConfigurationError(
            f"circle resolution must be >= {MIN_RESOLUTION}, got {resolution}")
    if not length > 0 or not math.isfinite(length):
        raise ConfigurationError(f"circle length must be positive, got {length}")
    N, h = resolution, length / resolution
    _, fwd, central, second, avg = _periodic_ops(N, h)
    return FiberMesh(
        kind="circle",
        dimension=1,
        points=(np.arange(N) * h)[:, None],
        vertex_measure=np.full(N, h),
        site_weights=np.full(N, h),
        site_interp=avg.tocsr(),
        site_grad=(fwd.tocsr(),),
        vertex_grad=(central.tocsr(),),
        total_volume=float(length),
        ricci_lower=0.0,
        ricci_constant=0.0,
        shape=(N,),
        lengths=(float(length),),
        hessian={(0, 0): second.tocsr()},
    )


def build_torus(resolution_per_axis=(32, 32), lengths=(2 * math.pi, 2 * math.pi)) -> FiberMesh:
    """Flat periodic torus [0, L1) x [0, L2) on a staggered grid.

    Sites are the x-edges followed by the y-edges.  On an x-edge the
    x-component is a forward difference and the y-component the average of
    the central differences at its two endpoints (symmetrically for
    y-edges), which keeps every operator second-order and free of
    checkerboard null modes.
    """
    N1, N2 = (int(r) for r in resolution_per_axis)
    L1, L2 = (float(x) for x in lengths)
    if min(N1, N2) < MIN_RESOLUTION:
        raise ConfigurationError(
            f"torus resolution must be >= {MIN_RESOLUTION} per axis, got {(N1, N2)}")
    if not (L1 > 0 and L2 > 0) or not (math.isfinite(L1) and math.isfinite(L2)):
        raise ConfigurationError(f"torus lengths must be positive, got {(L1, L2)}")
    h1, h2 = L1 / N1, L2 / N2
    I1, F1, C1, D1, P1 = _periodic_ops(N1, h1)
    I2, F2, C2, D2, P2 = _periodic_ops(N2, h2)
    kron = lambda a, b: sp.kron(a, b, format="csr")

    gx = sp.vstack([kron(F1, I2), kron(C1, P2)], format="csr")
    gy = sp.vstack([kron(P1, C2), kron(I1, F2)], format="csr")
    interp = sp.vstack([kron(P1, I2), kron(I1, P2)], format="csr")

    X1, X2 = np.meshgrid(np.arange(N1) * h1, np.arange(N2) * h2, indexing="ij")
    V = N1 * N2
    return FiberMesh(
        kind="torus",
        dimension=2,
        points=np.column_stack([X1.ravel(), X2.ravel()]),
        vertex_measure=np.full(V, h1 * h2),
        site_weights=np.full(2 * V, 0.5 * h1 * h2),
        site_interp=interp,
        site_grad=(gx, gy),
        vertex_grad=(kron(C1, I2), kron(I1, C2)),
        total_volume=L1 * L2,
        ricci_lower=0.0,
        ricci_constant=0.0,
        shape=(N1, N2),
        lengths=(L1, L2),
        hessian={
            (0, 0): kron(D1, I2),
            (1, 1): kron(I1, D2),
            (0, 1): kron(C1, C2),
        },
    )


# --------------------------------------------------------------------------
# icosphere

_PHI = (1.0 + math.sqrt(5.0)) / 2.0
_ICO_VERTS = [
    (-1, _PHI, 0), (1, _PHI, 0), (-1, -_PHI, 0), (1, -_PHI, 0),
    (0, -1, _PHI), (0, 1, _PHI), (0, -1, -_PHI), (0, 1, -_PHI),
    (_PHI, 0, -1), (_PHI, 0, 1), (-_PHI, 0, -1), (-_PHI, 0, 1),
]
_ICO_FACES = [
    (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
    (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
    (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
    (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
]


def icosphere(subdivisions: int):
    """Vertices on the unit sphere and outward-oriented triangles."""
    pts = [np.array(p, float) / np.linalg.norm(p) for p in _ICO_VERTS]
    faces = list(_ICO_FACES)
    for _ in range(subdivisions):
        cache = {}

        def midpoint(a, b):
            key = (a, b) if a < b else (b, a)
            if key not in cache:
                m = pts[a] + pts[b]
                pts.append(m / np.linalg.norm(m))
                cache[key] = len(pts) - 1
            return cache[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    P = np.array(pts)
    T = np.array(faces, dtype=np.int64)
    tri = P[T]
    normal = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    flip = np.einsum("ij,ij->i", normal, tri.mean(axis=1)) < 0
    T[flip] = T[flip][:, [0, 2, 1]]
    return P, T


def _cot(apex, b, c):
    u, v = b - apex, c - apex
    return np.einsum("ij,ij->i", u, v) / np.linalg.norm(np.cross(u, v), axis=1)


def build_sphere(subdivisions: int = 3) -> FiberMesh:
    """Unit round 2-sphere as an icosphere with P1 / cotangent operators.

    Vertex measures are circumcentric (Voronoi) areas.  With barycentric
    lumping the pointwise Laplacian error stalls near the valence-5
    vertices; with Voronoi lumping it decreases at first order.
    """
    subdivisions = int(subdivisions)
    if not 0 <= subdivisions <= MAX_SUBDIVISIONS:
        raise ConfigurationError(
            f"sphere subdivisions must be in [0, {MAX_SUBDIVISIONS}], got {subdivisions}")
    P, T = icosphere(subdivisions)
    V, nT = P.shape[0], T.shape[0]
    tri = P[T]
    cross = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    area = 0.5 * np.linalg.norm(cross, axis=1)
    unit_n = cross / (2.0 * area[:, None])

    # grad phi_i = n x (p_{i+2} - p_{i+1}) / (2A) on a CCW triangle
    rows = np.repeat(np.arange(nT), 3)
    cols = T.ravel()
    comps = []
    for k in range(3):
        opp = tri[:, (k + 2) % 3] - tri[:, (k + 1) % 3]
        comps.append(np.cross(unit_n, opp) / (2.0 * area[:, None]))
    comps = np.stack(comps, axis=1)  # (T, 3 local, 3 xyz)
    site_grad = tuple(
        sp.csr_matrix((comps[:, :, c].ravel(), (rows, cols)), shape=(nT, V))
        for c in range(3))
    # circumcentric (Voronoi) share of each triangle at each corner; the
    # icosphere is acute so every share is positive
    share = np.empty((nT, 3))
    for k in range(3):
        p0, p1, p2 = tri[:, k], tri[:, (k + 1) % 3], tri[:, (k + 2) % 3]
        share[:, k] = (np.sum((p1 - p0) ** 2, axis=1) * _cot(p2, p0, p1)
                       + np.sum((p2 - p0) ** 2, axis=1) * _cot(p1, p0, p2)) / 8.0
    interp = sp.csr_matrix(((share / area[:, None]).ravel(), (rows, cols)), shape=(nT, V))

    vmass = np.zeros(V)
    np.add.at(vmass, T.ravel(), share.ravel())

    # vertex gradient: area-weighted mean of adjacent triangle gradients,
    # projected onto the tangent plane at the vertex
    adj = sp.csr_matrix((np.repeat(area, 3), (cols, rows)), shape=(V, nT))
    adj = sp.diags(1.0 / np.asarray(adj.sum(axis=1)).ravel()) @ adj
    avg = [adj @ g for g in site_grad]
    vgrad = tuple(
        sum(sp.diags((1.0 if c == d else 0.0) - P[:, c] * P[:, d]) @ avg[d]
            for d in range(3)).tocsr()
        for c in range(3))

    return FiberMesh(
        kind="sphere",
        dimension=2,
        points=P,
        vertex_measure=vmass,
        site_weights=area,
        site_interp=interp,
        site_grad=site_grad,
        vertex_grad=vgrad,
        total_volume=math.fsum(vmass),
        ricci_lower=1.0,
        ricci_constant=1.0,
        subdivisions=subdivisions,
        cells=T,
    )


def build_fiber(kind: str, **params) -> FiberMesh:
    """Dispatch on the backend tag."""
    if kind == "circle":
        return build_circle(params.get("resolution", 64), params.get("length", 2 * math.pi))
    if kind == "torus":
        return build_torus(params.get("resolution", (32, 32)),
                           params.get("lengths", (2 * math.pi, 2 * math.pi)))
    if kind == "sphere":
        return build_sphere(params.get("subdivisions", 3))
    raise ConfigurationError(f"unknown fiber backend {kind!r}; expected one of {BACKENDS}")


# --------------------------------------------------------------------------
# operators


def _check_finite(field):
    field = np.asarray(field, dtype=float)
    if not np.all(np.isfinite(field)):
        raise NumericError("field contains non-finite values")
    return field


def integrate(mesh: FiberMesh, field) -> float:
    """Sum of field(v) * measure(v), compensated, in vertex order."""
    field = _check_finite(field)
    return math.fsum(field * mesh.vertex_measure)


def inner_vertex(mesh, u, w) -> float:
    return math.fsum(np.asarray(u) * np.asarray(w) * mesh.vertex_measure)


def inner_site(mesh, V, W) -> float:
    return math.fsum((np.einsum("sc,sc->s", V, W) * mesh.site_weights).tolist())


def gradient(mesh: FiberMesh, field) -> np.ndarray:
    """Full gradient vector at each site, shape (n_sites, ambient_dim)."""
    field = _check_finite(field)
    return np.column_stack([G @ field for G in mesh.site_grad])


def vertex_gradient(mesh: FiberMesh, field) -> np.ndarray:
    """Gradient at vertices, shape (n_vertices, ambient_dim)."""
    field = np.asarray(field, dtype=float)
    return np.column_stack([G @ field for G in mesh.vertex_grad])


def divergence(mesh: FiberMesh, vec) -> np.ndarray:
    """Vertex divergence of a site vector field (negative adjoint of gradient)."""
    vec = np.asarray(vec, dtype=float).reshape(mesh.n_sites, mesh.ambient_dim)
    w = mesh.site_weights
    acc = np.zeros(mesh.n_vertices)
    for c, G in enumerate(mesh.site_grad):
        acc += G.T @ (w * vec[:, c])
    return -acc / mesh.vertex_measure


def laplacian(mesh: FiberMesh, field) -> np.ndarray:
    return divergence(mesh, gradient(mesh, field))


def site_values(mesh: FiberMesh, field) -> np.ndarray:
    """Interpolate a vertex field to the sites."""
    return mesh.site_interp @ np.asarray(field, dtype=float)


def stiffness(mesh: FiberMesh) -> sp.csr_matrix:
    """Symmetric positive semidefinite matrix of u -> <grad u, grad u>."""
    W = sp.diags(mesh.site_weights)
    return sum((G.T @ W @ G) for G in mesh.site_grad).tocsr()


def write_off(mesh: FiberMesh, path) -> None:
    """Debug export of the sphere mesh in OFF text format."""
    if mesh.cells is None:
        raise UnsupportedFiberError("OFF export needs a triangle mesh")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("OFF\n")
        fh.write(f"{mesh.n_vertices} {mesh.cells.shape[0]} 0\n")
        for p in mesh.points:
            fh.write(" ".join(repr(float(x)) for x in p) + "\n")
        for t in mesh.cells:
            fh.write("3 " + " ".join(str(int(i)) for i in t) + "\n")
