"""Seeded smooth random fields, defined analytically on each backend.

Fields are evaluated from closed forms, so the same seed yields the same
continuum function at every refinement level.  Coefficients are scaled so
that sup|field| <= 1; ``grad_bound`` is a matching bound on sup|D field|.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError


@dataclass(frozen=True)
class SmoothField:
    kind: str
    seed: int
    terms: tuple          # (coefficient, mode) pairs
    grad_bound: float

    def __call__(self, mesh) -> np.ndarray:
        if mesh.kind != self.kind:
            raise ConfigurationError(f"field built for {self.kind}, mesh is {mesh.kind}")
        P = mesh.points
        out = np.zeros(mesh.n_vertices)
        if self.kind == "sphere":
            for c, (a, b, d) in self.terms:
                out += c * P[:, 0] ** a * P[:, 1] ** b * P[:, 2] ** d
            return out
        L = np.asarray(mesh.lengths)
        for (ca, cb), k in self.terms:
            phase = 2 * math.pi * (P / L) @ np.asarray(k, float)
            out += ca * np.cos(phase) + cb * np.sin(phase)
        return out


def smooth_field(mesh, seed: int, max_mode: int = 2) -> SmoothField:
    """Random low-frequency field on the mesh's backend."""
    rng = np.random.default_rng(seed)
    if mesh.kind == "sphere":
        monos = [m for m in itertools.product(range(4), repeat=3) if 1 <= sum(m) <= max_mode + 1]
        coef = rng.normal(size=len(monos))
        scale = np.abs(coef).sum()
        terms = tuple((float(c / scale), m) for c, m in zip(coef, monos))
        gb = sum(abs(c) * sum(m) for c, m in terms)
        return SmoothField("sphere", seed, terms, float(gb))
    dim = mesh.dimension
    modes = [k for k in itertools.product(range(-max_mode, max_mode + 1), repeat=dim)
             if any(k) and next(x for x in k if x) > 0]
    coef = rng.normal(size=(len(modes), 2))
    scale = np.abs(coef).sum()
    L = np.asarray(mesh.lengths)
    terms, gb = [], 0.0
    for (ca, cb), k in zip(coef / scale, modes):
        terms.append(((float(ca), float(cb)), k))
        gb += (abs(ca) + abs(cb)) * 2 * math.pi * float(np.linalg.norm(np.asarray(k) / L))
    return SmoothField(mesh.kind, seed, tuple(terms), float(gb))


def feasible_amplitude(field: SmoothField, warp, base: float, amplitude: float,
                       margin: float, shrink: float = 0.8, tries: int = 60) -> float:
    """Largest amplitude <= the request keeping the graph spacelike.

    Uses the sup bounds, so the result holds at every resolution:
    amplitude * grad_bound <= (1 - 2 margin) * min f on [base - a, base + a].
    """
    a = float(amplitude)
    lo, hi = warp.domain
    for _ in range(tries):
        if lo < base - a and base + a < hi:
            t = np.linspace(base - a, base + a, 201)
            if a * field.grad_bound <= (1.0 - 2.0 * margin) * float(np.min(warp.f(t))):
                return a
        a *= shrink
    raise ConfigurationError("no feasible amplitude found for the random field")


def random_graph_values(mesh, warp, seed: int, amplitude: float, base: float,
                        margin: float = 0.05, max_mode: int = 2):
    """u = base + a * field with a rescaled for the spacelike margin.

    Returns ``(values, amplitude_used, field)``.
    """
    fld = smooth_field(mesh, seed, max_mode)
    a = feasible_amplitude(fld, warp, base, amplitude, margin)
    return base + a * fld(mesh), a, fld


@dataclass(frozen=True)
class GraphFamily:
    """u = base + amplitude * field, evaluable on any mesh of one backend.

    ``field = None`` gives the constant family (a slice).
    """

    base: float
    amplitude: float = 0.0
    field: SmoothField | None = None

    @property
    def seed(self):
        return None if self.field is None else self.field.seed

    @property
    def is_constant(self) -> bool:
        return self.field is None or self.amplitude == 0.0

    def __call__(self, mesh) -> np.ndarray:
        if self.is_constant:
            return np.full(mesh.n_vertices, float(self.base))
        return self.base + self.amplitude * self.field(mesh)


def random_family(mesh, warp, seed: int, amplitude: float, base: float,
                  margin: float = 0.05, max_mode: int = 2) -> GraphFamily:
    """Seeded random graph family, feasible at every resolution."""
    _, a, fld = random_graph_values(mesh, warp, seed, amplitude, base, margin, max_mode)
    return GraphFamily(float(base), float(a), fld)
