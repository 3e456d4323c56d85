"""Solver for the prescribed mean curvature equation H(u) = f'(u)/f(u).

Newton steps use finite-difference Jacobian-vector products and restarted
GMRES preconditioned by the linearization at a constant, J ~ Lap/(n f^2).
A pseudo-transient step u <- u + dt (M + dt K/(n f^2))^{-1} M R(u) serves
as fallback.  Its sign is the stable one: R ~ Lap u/(n f^2) + ..., so
u' = R(u) is a forward heat flow.
"""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import fiber as fb
from . import graphgeo as gg
from . import identities as idn
from .errors import ConfigurationError
from .fields import GraphFamily, random_family

VERDICTS = ("constant", "nonconstant-stationary", "diverged", "margin-stuck")
METHODS = ("newton", "descent")
INIT_KINDS = ("constant", "random-bump", "custom")
MIN_STEP = 1e-14


@dataclass
class SolveConfig:
    method: str = "newton"
    tol: float = 1e-10
    max_iter: int = 200
    margin: float = 0.05
    backtrack: float = 0.5
    max_backtracks: int = 40
    levenberg: float = 1e-8
    levenberg_up: float = 10.0
    levenberg_down: float = 0.1
    krylov_rtol: float = 1e-3
    krylov_restart: int = 50
    krylov_maxiter: int = 20
    descent_dt: float = 1.0
    descent_dt_max: float = 1e6
    form: str = "auto"
    constancy_rtol: float = 1e-6
    seed: int = 0
    init: str = "random-bump"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.method not in METHODS:
            raise ConfigurationError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.init not in INIT_KINDS:
            raise ConfigurationError(f"init must be one of {INIT_KINDS}, got {self.init!r}")
        for name in ("tol", "levenberg", "krylov_rtol", "descent_dt", "descent_dt_max",
                     "constancy_rtol"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigurationError(f"{name} must be positive, got {v!r}")
        if not 0.0 < self.margin <= 0.5:
            raise ConfigurationError(f"margin must lie in (0, 0.5], got {self.margin}")
        if not 0.0 < self.backtrack < 1.0:
            raise ConfigurationError(f"backtrack factor must lie in (0, 1), got {self.backtrack}")
        if not self.levenberg_up > 1.0 or not 0.0 < self.levenberg_down < 1.0:
            raise ConfigurationError("Levenberg factors need up > 1 and 0 < down < 1")
        for name in ("max_iter", "max_backtracks", "krylov_restart", "krylov_maxiter"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < (0 if name == "max_iter" else 1):
                raise ConfigurationError(f"{name} must be a positive integer, got {v!r}")
        if self.form not in ("auto", "strong", "weak"):
            raise ConfigurationError(f"unknown mean-curvature form {self.form!r}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SolveReport:
    iterations: int
    history: list
    final_residual: float
    osc: float
    sup_grad_ratio: float
    verdict: str
    contradiction: bool
    wall_time: float
    config: dict
    theorems: list
    solution: gg.GraphFunction = field(repr=False)
    steps: dict = field(default_factory=dict)
    message: str = ""

    @property
    def converged(self) -> bool:
        return self.final_residual <= self.config["tol"]

    def summary(self) -> dict:
        return {
            "iterations": self.iterations,
            "initial_residual": self.history[0] if self.history else None,
            "final_residual": self.final_residual,
            "osc_u": self.osc,
            "mean_u": float(np.mean(self.solution.values)),
            "sup_grad_ratio": self.sup_grad_ratio,
            "newton_steps": self.steps.get("newton", 0),
            "descent_steps": self.steps.get("descent", 0),
        }


def residual(u: gg.GraphFunction, form: str = "auto") -> np.ndarray:
    """R(u) = H(u) - f'(u)/f(u) at every vertex, after the margin check."""
    gg.check_spacelike(u)
    return gg.prescribed_residual(u.mesh, u.warp, u.values, form)


def initial_graph(mesh, warp, cfg: SolveConfig, base: float, amplitude: float = 0.3,
                  values=None) -> tuple:
    """Initial data and its family for the configured kind.

    Returns ``(GraphFunction, GraphFamily | None)``.
    """
    if cfg.init == "constant":
        fam = GraphFamily(float(base))
        return gg.GraphFunction(mesh, warp, fam(mesh), cfg.margin), fam
    if cfg.init == "random-bump":
        fam = random_family(mesh, warp, cfg.seed, amplitude, base, cfg.margin)
        return gg.GraphFunction(mesh, warp, fam(mesh), cfg.margin), fam
    if values is None:
        raise ConfigurationError("custom initial data needs explicit vertex values")
    return gg.GraphFunction(mesh, warp, values, cfg.margin), None


def sup_grad_ratio(u: gg.GraphFunction) -> float:
    rv, rs = gg.spacelike_ratios(u)
    return float(max(rv.max(), rs.max()))


@dataclass
class Verdict:
    verdict: str
    contradiction: bool
    threshold: float
    theorems: list


def constancy_threshold(u: gg.GraphFunction, rtol: float = 1e-6) -> float:
    return rtol * (1.0 + abs(float(np.mean(u.values))))


def constancy_verdict(u: gg.GraphFunction, final_residual: float, tol: float = 1e-10,
                      theorems=None, rtol: float = 1e-6, stuck: bool = False) -> Verdict:
    """Classify a terminal iterate.

    A converged non-constant iterate attaches the theorem checklist; the
    contradiction flag is raised when a theorem whose hypotheses all hold
    predicts a slice or umbilic graph that is not observed.
    """
    thr = constancy_threshold(u, rtol)
    if not math.isfinite(final_residual) or final_residual > tol:
        return Verdict("margin-stuck" if stuck else "diverged", False, thr, theorems or [])
    if u.osc() <= thr:
        return Verdict("constant", False, thr, theorems or [])
    if theorems is None:
        theorems = idn.classify_theorems(u)
    return Verdict("nonconstant-stationary", idn.contradiction_flag(theorems), thr, theorems)


class _Problem:
    """Residual, preconditioner and feasibility for one mesh and warp."""

    def __init__(self, u0: gg.GraphFunction, cfg: SolveConfig):
        self.mesh, self.warp, self.cfg = u0.mesh, u0.warp, cfg
        self.form = gg.resolve_form(self.mesh, cfg.form)
        self.n = self.mesh.dimension
        self.K = fb.stiffness(self.mesh).tocsc()
        self.M = sp.diags(self.mesh.vertex_measure).tocsc()
        self.evals = 0
        self._lu_at = None
        self._lu = None

    def R(self, values) -> np.ndarray:
        self.evals += 1
        return gg.prescribed_residual(self.mesh, self.warp, values, self.form)

    def feasible(self, values) -> bool:
        return gg.is_feasible(gg.GraphFunction(self.mesh, self.warp, values, self.cfg.margin))

    def scale(self, values) -> float:
        return self.n * float(np.mean(self.warp.f(values))) ** 2

    def diag_estimate(self, values) -> float:
        d = self.K.diagonal() / self.mesh.vertex_measure
        return float(np.max(np.abs(d))) / self.scale(values)

    def lu(self, values, shift):
        """Factor (K + shift c M) with c = n fbar^2, reused while the key is unchanged."""
        key = (round(self.scale(values), 6), shift)
        if self._lu_at != key:
            c = self.scale(values)
            sigma = shift + 1e-10 * self.diag_estimate(values)
            self._lu = spla.splu((self.K + sigma * c * self.M).tocsc())
            self._lu_at = key
        return self._lu

    def descent_step(self, values, r, dt):
        c = self.scale(values)
        A = (self.M + (dt / c) * self.K).tocsc()
        return dt * spla.spsolve(A, self.M @ r)


def _newton_direction(P: _Problem, u, r, mu):
    """Inexact Newton step restricted to mass-mean-zero directions.

    Constants form a continuum of solutions, so J is nearly singular along
    them; an unrestricted step drifts the mean level by R/J ~ 1/eps.
    Returns ``(step, stagnated)``.
    """
    n_u = np.linalg.norm(u)
    Mv = P.mesh.vertex_measure
    mass = float(Mv.sum())

    def proj(v):
        return v - float(Mv @ v) / mass

    def jv(v):
        v = proj(v)
        nv = np.linalg.norm(v)
        if nv == 0:
            return np.zeros_like(v)
        d = math.sqrt(np.finfo(float).eps) * (1.0 + n_u) / nv
        return proj((P.R(u + d * v) - r) / d - mu * v)

    V = u.size
    J = spla.LinearOperator((V, V), matvec=jv, dtype=float)
    c = P.scale(u)
    lu = P.lu(u, mu)

    def prec(x):
        return proj(-c * lu.solve(Mv * x))

    Pm = spla.LinearOperator((V, V), matvec=prec, dtype=float)
    # the left null vector of J at a constant is M 1, so project the range too
    rhs = -proj(r)
    s, _ = spla.gmres(J, rhs, rtol=P.cfg.krylov_rtol, atol=0.0, restart=P.cfg.krylov_restart,
                      maxiter=P.cfg.krylov_maxiter, M=Pm)
    s = proj(s)
    lin = np.linalg.norm(jv(s) - rhs) / max(np.linalg.norm(rhs), np.finfo(float).tiny)
    return s, bool(lin > 0.5)


def _line_search(P: _Problem, u, s, rnorm):
    """Backtrack until feasible with non-increasing sup residual."""
    alpha, infeasible = 1.0, 0
    for _ in range(P.cfg.max_backtracks + 1):
        if alpha * np.max(np.abs(s)) < MIN_STEP:
            break
        cand = u + alpha * s
        if not P.feasible(cand):
            infeasible += 1
        else:
            rc = P.R(cand)
            rn = float(np.max(np.abs(rc)))
            if math.isfinite(rn) and rn <= rnorm:
                return cand, rc, rn, infeasible
        alpha *= P.cfg.backtrack
    return None, None, None, infeasible


def solve(u0: gg.GraphFunction, cfg: SolveConfig | None = None, classify: bool = True) -> SolveReport:
    """Drive R(u) to zero from feasible initial data.

    Never raises on divergence; the verdict records the outcome.
    """
    cfg = cfg or SolveConfig()
    cfg.validate()
    t_start = time.perf_counter()
    if not gg.is_feasible(u0, cfg.margin):
        raise ConfigurationError(
            f"initial data violate the spacelike margin {cfg.margin} or leave the warp domain")
    P = _Problem(u0, cfg)
    u = np.array(u0.values, dtype=float)
    r = P.R(u)
    rnorm = float(np.max(np.abs(r)))
    history = [rnorm]
    steps = {"newton": 0, "descent": 0, "rejected": 0}
    mu0 = cfg.levenberg * P.diag_estimate(u)
    mu = mu0
    dt = cfg.descent_dt
    stuck = False
    message = ""
    it = 0
    while rnorm > cfg.tol and it < cfg.max_iter and math.isfinite(rnorm):
        it += 1
        accepted = False
        infeasible = 0
        if cfg.method == "newton":
            s, stagnated = _newton_direction(P, u, r, mu)
            cand, rc, rn, infeasible = _line_search(P, u, s, rnorm)
            if cand is not None and not stagnated:
                mu = max(mu * cfg.levenberg_down, mu0)
            else:
                mu *= cfg.levenberg_up
            if cand is not None:
                u, r, rnorm = cand, rc, rn
                steps["newton"] += 1
                accepted = True
        if not accepted:
            for _ in range(cfg.max_backtracks + 1):
                s = P.descent_step(u, r, dt)
                if np.max(np.abs(s)) < MIN_STEP:
                    break
                cand = u + s
                if P.feasible(cand):
                    rc = P.R(cand)
                    rn = float(np.max(np.abs(rc)))
                    if math.isfinite(rn) and rn <= rnorm:
                        u, r, rnorm = cand, rc, rn
                        steps["descent"] += 1
                        dt = min(dt * 2.0, cfg.descent_dt_max)
                        accepted = True
                        break
                else:
                    infeasible += 1
                dt *= cfg.backtrack
        history.append(rnorm)
        if not accepted:
            steps["rejected"] += 1
            stuck = infeasible > 0
            message = ("no feasible step reduces the residual" if stuck
                       else "no step reduces the residual")
            break
    final = gg.GraphFunction(u0.mesh, u0.warp, u, cfg.margin)
    theorems = idn.classify_theorems(final, P.form) if classify and rnorm <= cfg.tol else None
    v = constancy_verdict(final, rnorm, cfg.tol, theorems, cfg.constancy_rtol, stuck)
    if not message and v.verdict == "diverged":
        message = "iteration limit reached" if math.isfinite(rnorm) else "non-finite residual"
    return SolveReport(
        iterations=it,
        history=history,
        final_residual=rnorm,
        osc=final.osc(),
        sup_grad_ratio=sup_grad_ratio(final),
        verdict=v.verdict,
        contradiction=v.contradiction,
        wall_time=time.perf_counter() - t_start,
        config=cfg.to_dict(),
        theorems=v.theorems,
        solution=final,
        steps=steps,
        message=message,
    )
