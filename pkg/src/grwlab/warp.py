"""Warping functions f: I -> (0, inf) and curvature-condition evaluators."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate as _quad
from scipy import optimize
from scipy.interpolate import CubicSpline

from .errors import ConfigurationError, DomainError, UnsupportedFiberError

KINDS = ("constant", "exponential", "cosh", "polynomial", "tabulated")
DEFAULT_SAMPLES = 10_000
EINSTEIN_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class WarpSpec:
    """A warping function on the open interval ``domain``.

    ``params`` depends on ``kind``:

    - constant: (a,)            f = a
    - exponential: (a, b)       f = a exp(b t)
    - cosh: ()                  f = cosh t, I = R
    - polynomial: coefficients  f = sum c_k t^k (finite domain)
    - tabulated: (knots, values), clamped cubic spline
    """

    kind: str
    params: tuple = ()
    domain: tuple = (-math.inf, math.inf)
    anchor: float | None = None
    _spline: CubicSpline | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown warp kind {self.kind!r}; expected one of {KINDS}")
        lo, hi = self.domain
        if not lo < hi:
            raise ConfigurationError(f"empty warp domain {self.domain}")
        if self.anchor is None:
            object.__setattr__(self, "anchor", _default_anchor(lo, hi))
        elif not lo < self.anchor < hi:
            raise ConfigurationError(f"anchor {self.anchor} outside domain {self.domain}")

    # -- pointwise values -------------------------------------------------

    def _check(self, t):
        t = np.asarray(t, dtype=float)
        lo, hi = self.domain
        if not np.all((t > lo) & (t < hi)):
            bad = t[~((t > lo) & (t < hi))]
            raise DomainError(f"t = {bad.flat[0]!r} outside warp domain ({lo}, {hi})")
        return t

    def f(self, t):
        t = self._check(t)
        k, p = self.kind, self.params
        if k == "constant":
            return np.full_like(t, p[0])
        if k == "exponential":
            return p[0] * np.exp(p[1] * t)
        if k == "cosh":
            return np.cosh(t)
        if k == "polynomial":
            return np.polynomial.polynomial.polyval(t, p)
        return self._spline(t)

    def fp(self, t):
        t = self._check(t)
        k, p = self.kind, self.params
        if k == "constant":
            return np.zeros_like(t)
        if k == "exponential":
            return p[0] * p[1] * np.exp(p[1] * t)
        if k == "cosh":
            return np.sinh(t)
        if k == "polynomial":
            return np.polynomial.polynomial.polyval(t, np.polynomial.polynomial.polyder(p))
        return self._spline(t, 1)

    def fpp(self, t):
        t = self._check(t)
        k, p = self.kind, self.params
        if k == "constant":
            return np.zeros_like(t)
        if k == "exponential":
            return p[0] * p[1] ** 2 * np.exp(p[1] * t)
        if k == "cosh":
            return np.cosh(t)
        if k == "polynomial":
            return np.polynomial.polynomial.polyval(t, np.polynomial.polynomial.polyder(p, 2))
        return self._spline(t, 2)

    def hubble(self, t):
        """f'/f."""
        t = self._check(t)
        if self.kind == "constant":
            return np.zeros_like(t)
        if self.kind == "exponential":
            return np.full_like(t, self.params[1])
        if self.kind == "cosh":
            return np.tanh(t)
        return self.fp(t) / self.f(t)

    def log_convexity(self, t):
        """(log f)'' = f''/f - (f'/f)^2."""
        t = self._check(t)
        if self.kind in ("constant", "exponential"):
            return np.zeros_like(t)
        if self.kind == "cosh":
            return 1.0 / np.cosh(t) ** 2
        f, fp = self.f(t), self.fp(t)
        return self.fpp(t) / f - (fp / f) ** 2

    def ncc_density(self, t):
        """f^2 (log f)'' = f f'' - f'^2, the quantity bounded in the NCC."""
        t = self._check(t)
        if self.kind in ("constant", "exponential"):
            return np.zeros_like(t)
        if self.kind == "cosh":
            return np.ones_like(t)
        return self.f(t) * self.fpp(t) - self.fp(t) ** 2

    def primitive(self, t):
        """Closed-form primitive of f anchored at ``self.anchor``."""
        t = self._check(t)
        s, k, p = self.anchor, self.kind, self.params
        if k == "constant":
            return p[0] * (t - s)
        if k == "exponential":
            a, b = p
            if b == 0:
                return a * (t - s)
            return (a / b) * (np.exp(b * t) - np.exp(b * s))
        if k == "cosh":
            return np.sinh(t) - math.sinh(s)
        if k == "polynomial":
            P = np.polynomial.polynomial.polyint(p)
            return (np.polynomial.polynomial.polyval(t, P)
                    - np.polynomial.polynomial.polyval(s, P))
        anti = self._spline.antiderivative()
        return anti(t) - anti(s)

    def primitive_quadrature(self, t: float) -> float:
        """Primitive by adaptive quadrature; independent of :meth:`primitive`."""
        t = float(self._check(t))
        val, _ = _quad.quad(lambda s: float(self.f(s)), self.anchor, t,
                            epsabs=1e-13, epsrel=1e-12, limit=200)
        return val

    def to_dict(self) -> dict:
        params = self.params
        if self.kind == "tabulated":
            params = [list(map(float, params[0])), list(map(float, params[1]))]
        return {
            "kind": self.kind,
            "params": [float(x) for x in params] if self.kind != "tabulated" else params,
            "domain": [_json_float(x) for x in self.domain],
            "anchor": self.anchor,
        }


def _json_float(x):
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")


def _default_anchor(lo, hi):
    if lo < 0.0 < hi:
        return 0.0
    if math.isfinite(lo) and math.isfinite(hi):
        return 0.5 * (lo + hi)
    return lo + 1.0 if math.isfinite(lo) else hi - 1.0


# --------------------------------------------------------------------------
# catalog


def constant(value: float = 1.0, domain=(-math.inf, math.inf)) -> WarpSpec:
    if not value > 0:
        raise ConfigurationError(f"constant warp must be positive, got {value}")
    return WarpSpec("constant", (float(value),), tuple(domain))


def exponential(scale: float = 1.0, rate: float = 1.0, domain=(-math.inf, math.inf)) -> WarpSpec:
    if not scale > 0:
        raise ConfigurationError(f"exponential warp scale must be positive, got {scale}")
    return WarpSpec("exponential", (float(scale), float(rate)), tuple(domain))


def cosh() -> WarpSpec:
    return WarpSpec("cosh", (), (-math.inf, math.inf))


def polynomial(coeffs, domain) -> WarpSpec:
    """f(t) = sum_k coeffs[k] t^k on a finite domain where it is positive."""
    coeffs = tuple(float(c) for c in coeffs)
    lo, hi = domain
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ConfigurationError("polynomial warp needs a finite domain")
    w = WarpSpec("polynomial", coeffs, (float(lo), float(hi)))
    t = np.linspace(lo, hi, DEFAULT_SAMPLES + 2)[1:-1]
    if np.min(w.f(t)) <= 0:
        raise ConfigurationError("polynomial warp is not positive on its domain")
    return w


def tabulated(knots, values) -> WarpSpec:
    """Clamped cubic spline through (knots, values).

    End slopes are estimated with second-order one-sided differences.
    """
    x = np.asarray(knots, dtype=float)
    y = np.asarray(values, dtype=float)
    if x.ndim != 1 or x.shape != y.shape or x.size < 4:
        raise ConfigurationError("tabulated warp needs >= 4 matching knots and values")
    if np.any(np.diff(x) <= 0):
        raise ConfigurationError("tabulated knots must be strictly increasing")
    if np.any(y <= 0) or not np.all(np.isfinite(y)):
        raise ConfigurationError("tabulated values must be finite and positive")
    d0 = _one_sided_slope(x[:3], y[:3])
    d1 = -_one_sided_slope(-x[::-1][:3], y[::-1][:3])
    spline = CubicSpline(x, y, bc_type=((1, d0), (1, d1)))
    w = WarpSpec("tabulated", (tuple(x), tuple(y)), (float(x[0]), float(x[-1])), _spline=spline)
    t = np.linspace(x[0], x[-1], DEFAULT_SAMPLES + 2)[1:-1]
    if np.min(spline(t)) <= 0:
        raise ConfigurationError("tabulated spline dips below zero")
    return w


def _one_sided_slope(x, y):
    # derivative at x[0] of the quadratic through three points
    h1, h2 = x[1] - x[0], x[2] - x[0]
    return (y[1] - y[0]) * h2 / (h1 * (h2 - h1)) - (y[2] - y[0]) * h1 / (h2 * (h2 - h1))


def build_warp(kind: str, params=(), domain=None) -> WarpSpec:
    """Dispatch used by the config and CLI layers."""
    params = tuple(params)
    dom = tuple(domain) if domain is not None else (-math.inf, math.inf)
    if kind == "constant":
        return constant(*(params or (1.0,)), domain=dom)
    if kind == "exponential":
        return exponential(*(params or (1.0, 1.0)), domain=dom)
    if kind == "cosh":
        if params:
            raise ConfigurationError("cosh warp takes no parameters")
        return cosh()
    if kind == "polynomial":
        if domain is None:
            raise ConfigurationError("polynomial warp needs a domain")
        return polynomial(params, dom)
    if kind == "tabulated":
        half = len(params) // 2
        return tabulated(params[:half], params[half:])
    raise ConfigurationError(f"unknown warp kind {kind!r}; expected one of {KINDS}")


# module-level aliases for the evaluator operations
def eval_f(w: WarpSpec, t):
    return w.f(t)


def eval_fp(w: WarpSpec, t):
    return w.fp(t)


def eval_fpp(w: WarpSpec, t):
    return w.fpp(t)


def hubble(w: WarpSpec, t):
    return w.hubble(t)


def primitive_F(w: WarpSpec, t):
    return w.primitive(t)


# --------------------------------------------------------------------------
# condition reports


@dataclass
class SignReport:
    sign: str
    nonnegative: bool
    nonpositive: bool
    fp_min: float
    fp_max: float
    samples: int


@dataclass
class NCCReport:
    margin: float
    holds: bool
    strict: bool
    sup_density: float
    argsup: float
    ricci_lower: float
    dimension: int


@dataclass
class EinsteinReport:
    fiber_constant: float
    ratio_residual: float
    ratio_holds: bool
    ambient_constant_printed: float | None
    ambient_constant_spread: float | None
    ambient_constant_holds: bool | None
    log_identity_residual: float
    log_identity_holds: bool
    log_route_einstein: bool
    oracle_einstein: bool
    oracle_ambient_constant: float
    oracle_residual: float
    routes_agree: bool
    samples: int
    notes: list = field(default_factory=list)


@dataclass
class ConditionReport:
    interval: tuple
    hubble: SignReport
    log_convexity_min: float
    log_convexity_max: float
    log_convex: bool
    strictly_log_convex: bool
    ncc: NCCReport
    einstein: EinsteinReport | None
    flags: list = field(default_factory=list)


def _interval_samples(w: WarpSpec, interval, samples):
    a, b = (float(x) for x in interval)
    if not (math.isfinite(a) and math.isfinite(b)) or not a < b:
        raise ConfigurationError(f"interval must be finite and non-empty, got {interval}")
    lo, hi = w.domain
    if not (lo < a and b < hi):
        raise DomainError(f"interval [{a}, {b}] is not inside the warp domain ({lo}, {hi})")
    return np.linspace(a, b, int(samples))


def classify_hubble_sign(w: WarpSpec, interval, samples: int = DEFAULT_SAMPLES,
                         tol: float = 0.0) -> SignReport:
    """Dense-sample sign classification of f' on the closed interval."""
    t = _interval_samples(w, interval, samples)
    fp = w.fp(t)
    lo, hi = float(fp.min()), float(fp.max())
    nonneg, nonpos = lo >= -tol, hi <= tol
    sign = "non-negative" if nonneg else "non-positive" if nonpos else "mixed"
    return SignReport(sign, bool(nonneg), bool(nonpos), lo, hi, int(samples))


def sup_on_interval(func, interval, samples: int = DEFAULT_SAMPLES, xtol: float = 1e-10):
    """Sup of a scalar function: dense sampling plus bounded refinement."""
    a, b = interval
    t = np.linspace(a, b, samples)
    vals = func(t)
    k = int(np.argmax(vals))
    best_t, best = float(t[k]), float(vals[k])
    left, right = t[max(k - 1, 0)], t[min(k + 1, samples - 1)]
    if right > left:
        res = optimize.minimize_scalar(lambda s: -float(func(np.array(s))),
                                       bounds=(left, right), method="bounded",
                                       options={"xatol": xtol})
        if res.success and -res.fun > best:
            best_t, best = float(res.x), float(-res.fun)
    return best, best_t


def ncc_margin(w: WarpSpec, fiber, interval, samples: int = DEFAULT_SAMPLES) -> NCCReport:
    """inf over the interval of Ric^F - (n-1) f^2 (log f)''."""
    _interval_samples(w, interval, 2)
    n = fiber.dimension
    sup, arg = sup_on_interval(w.ncc_density, interval, samples)
    margin = fiber.ricci_lower - (n - 1) * sup
    return NCCReport(
        margin=float(margin),
        holds=bool(margin >= -1e-12),
        strict=bool(margin > 1e-12),
        sup_density=sup,
        argsup=arg,
        ricci_lower=float(fiber.ricci_lower),
        dimension=n,
    )


def warped_ricci(w: WarpSpec, fiber_constant: float, n: int, t):
    """Ambient Ricci components in an orthonormal frame (d_t, X/f).

    Returns ``(ric_tt, ric_ff)`` with Ric(d_t, d_t) = -n f''/f and, for a
    unit fiber direction X, Ric(X, X) = c/f^2 + f''/f + (n-1) f'^2/f^2.
    """
    f, fp, fpp = w.f(t), w.fp(t), w.fpp(t)
    ric_tt = -n * fpp / f
    ric_ff = fiber_constant / f ** 2 + fpp / f + (n - 1) * (fp / f) ** 2
    return ric_tt, ric_ff


def einstein_check(w: WarpSpec, fiber, interval, samples: int = 1000,
                   tol: float = EINSTEIN_TOL) -> EinsteinReport:
    """Printed Einstein conditions and the Ricci oracle, side by side.

    The printed route evaluates f''/f = c/n, constancy of the ambient
    constant solved from (c + (n-1) f'^2)/f^2 = cbar (n-1)/n, and
    (n-1)(log f)'' = c/f^2.  The oracle assembles the ambient Ricci tensor
    and tests Ric = cbar * g.  Disagreements are reported, not reconciled.
    """
    if fiber.ricci_constant is None:
        raise UnsupportedFiberError(f"{fiber.kind} fiber has no constant Ricci curvature")
    c, n = float(fiber.ricci_constant), fiber.dimension
    t = _interval_samples(w, interval, samples)
    f, fp, fpp = w.f(t), w.fp(t), w.fpp(t)
    notes = []

    r1 = float(np.max(np.abs(fpp / f - c / n)))
    if n >= 2:
        cbar_t = n * (c + (n - 1) * fp ** 2) / ((n - 1) * f ** 2)
        cbar_printed = float(np.mean(cbar_t))
        spread = float(np.ptp(cbar_t))
        second_ok = spread <= tol * max(1.0, abs(cbar_printed))
    else:
        cbar_printed = spread = second_ok = None
        notes.append("n = 1: ambient constant of the second identity is undefined")
    r23 = float(np.max(np.abs((n - 1) * w.log_convexity(t) - c / f ** 2)))
    log_ok = r23 <= tol
    log_route = log_ok and (second_ok is not False)

    ric_tt, ric_ff = warped_ricci(w, c, n, t)
    cbar_time = -ric_tt  # Ric(d_t, d_t) = cbar * g(d_t, d_t) = -cbar
    oracle_cbar = float(np.mean(cbar_time))
    scale = max(1.0, abs(oracle_cbar))
    oracle_res = float(max(np.max(np.abs(cbar_time - ric_ff)),
                           np.max(np.abs(cbar_time - oracle_cbar))))
    oracle_ok = oracle_res <= tol * scale

    if not r1 <= tol:
        notes.append(f"printed identity f''/f = c/n fails: max residual {r1:.6g} "
                     f"with c = {c:g} read as Ric^F = c g")
    if log_route != oracle_ok:
        notes.append("log-convexity route and Ricci oracle disagree")
    return EinsteinReport(
        fiber_constant=c,
        ratio_residual=r1,
        ratio_holds=bool(r1 <= tol),
        ambient_constant_printed=cbar_printed,
        ambient_constant_spread=spread,
        ambient_constant_holds=second_ok if second_ok is None else bool(second_ok),
        log_identity_residual=r23,
        log_identity_holds=bool(log_ok),
        log_route_einstein=bool(log_route),
        oracle_einstein=bool(oracle_ok),
        oracle_ambient_constant=oracle_cbar,
        oracle_residual=oracle_res,
        routes_agree=bool(log_route == oracle_ok),
        samples=int(samples),
        notes=notes,
    )


def conditions(w: WarpSpec, fiber, interval, samples: int = DEFAULT_SAMPLES) -> ConditionReport:
    """Full condition report: Hubble sign, log-convexity, NCC, Einstein."""
    t = _interval_samples(w, interval, samples)
    lc = w.log_convexity(t)
    flags = []
    if not fiber.paper_valid:
        flags.append("n = 1 oracle backend: outside the n >= 2 hypothesis")
    einstein = None
    if fiber.ricci_constant is not None:
        einstein = einstein_check(w, fiber, interval)
    return ConditionReport(
        interval=(float(interval[0]), float(interval[1])),
        hubble=classify_hubble_sign(w, interval, samples),
        log_convexity_min=float(lc.min()),
        log_convexity_max=float(lc.max()),
        log_convex=bool(lc.min() >= -1e-12),
        strictly_log_convex=bool(lc.min() > 1e-12),
        ncc=ncc_margin(w, fiber, interval, samples),
        einstein=einstein,
        flags=flags,
    )
