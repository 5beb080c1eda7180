"""Nonlinearities, potentials and problem configuration.

The central objects are pairs (F, f) with F' = f.  Built-in families:

* ``exp_critical(lam, dimension)`` -- f(t) = lam * t * exp(a t^2) with a = 2
  in dimension 4 and a = 1 in dimension 2; F has the matching closed form.
* ``exact_growth_family(theta)`` -- F(t) = (exp(t^2)-1-t^2) / (1+|t|^theta),
  f = F' differentiated analytically.
* ``user_nonlinearity(f_expr, ...)`` -- f parsed from an expression; F is an
  adaptive-Simpson antiderivative cached per evaluation point.

Trial amplitudes are capped (default 6.0): exp(2 t^2) leaves the useful
double range long before overflow, and a silent clamp would corrupt every
functional downstream, so exceeding the cap raises OverflowCapError.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .expressions import parse_expression
from .grid import RadialGrid

DEFAULT_OVERFLOW_CAP = 6.0

ADAMS_BETA = {4: 32.0 * np.pi**2, 2: 4.0 * np.pi}


class OverflowCapError(FloatingPointError):
    """Trial amplitude exceeded the overflow cap (solver step too aggressive)."""


def check_cap(values, cap: float):
    m = float(np.max(np.abs(values))) if np.ndim(values) else abs(float(values))
    if m > cap:
        raise OverflowCapError(f"amplitude {m:.3f} exceeds overflow cap {cap}")


def adaptive_simpson(fn: Callable, a: float, b: float, tol: float = 1e-10,
                     max_depth: int = 30) -> float:
    """Classic adaptive Simpson quadrature of fn over [a, b]."""

    def simpson(x0, x2, f0, f1, f2):
        return (x2 - x0) / 6.0 * (f0 + 4.0 * f1 + f2)

    def recurse(x0, x2, f0, f1, f2, whole, depth):
        xm = 0.5 * (x0 + x2)
        xl, xr = 0.5 * (x0 + xm), 0.5 * (xm + x2)
        fl, fr = float(fn(xl)), float(fn(xr))
        left = simpson(x0, xm, f0, fl, f1)
        right = simpson(xm, x2, f1, fr, f2)
        # scale-aware acceptance so huge integrands terminate at relative tol
        gate = 15.0 * tol * max(1.0, abs(left) + abs(right))
        if depth >= max_depth or abs(left + right - whole) <= gate:
            return left + right + (left + right - whole) / 15.0
        return (recurse(x0, xm, f0, fl, f1, left, depth + 1)
                + recurse(xm, x2, f1, fr, f2, right, depth + 1))

    if a == b:
        return 0.0
    f0, f2 = float(fn(a)), float(fn(b))
    f1 = float(fn(0.5 * (a + b)))
    return recurse(a, b, f0, f1, f2, simpson(a, b, f0, f1, f2), 0)


def _exprel2(x):
    """exp(x) - 1 - x, accurate for small x (series below 1e-3)."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-3
    out = np.where(small,
                   0.5 * x * x * (1.0 + x / 3.0 + x * x / 12.0 + x**3 / 60.0),
                   np.expm1(np.where(small, 0.0, x)) - np.where(small, 0.0, x))
    return out


@dataclass(eq=False)
class NonlinearitySpec:
    """A nonlinearity (F, f) together with its critical exponent data.

    ``f``/``F`` are vectorized callables.  ``alpha0`` is the critical
    exponential rate; ``ar_mu`` the superquadraticity exponent recorded for
    the condition checker; ``exp_coeff`` is set for the exp-critical family
    (the a in f = lam t exp(a t^2)) and None otherwise.
    """

    kind: str
    f: Callable
    F: Callable
    alpha0: float
    ar_mu: float = 2.0
    lam: float = 1.0
    exp_coeff: Optional[float] = None
    fprime: Optional[Callable] = None
    params: dict = field(default_factory=dict)


def exp_critical(lam: float, dimension: int = 4) -> NonlinearitySpec:
    """f(t) = lam t exp(a t^2); a = alpha0 = 2 for n=4, 1 for n=2."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    a = 2.0 if dimension == 4 else 1.0

    def f(t):
        t = np.asarray(t, dtype=float)
        return lam * t * np.exp(a * t * t)

    def F(t):
        t = np.asarray(t, dtype=float)
        return lam / (2.0 * a) * np.expm1(a * t * t)

    def fprime(t):
        t = np.asarray(t, dtype=float)
        return lam * np.exp(a * t * t) * (1.0 + 2.0 * a * t * t)

    return NonlinearitySpec("exp_critical", f, F, alpha0=a, ar_mu=2.0, lam=lam,
                            exp_coeff=a, fprime=fprime,
                            params={"lam": lam, "dimension": dimension})


def exact_growth_family(theta: float) -> NonlinearitySpec:
    """F(t) = (exp(t^2)-1-t^2)/(1+|t|^theta) with analytic derivative."""
    if theta <= 0:
        raise ValueError("theta must be positive")

    def F(t):
        t = np.asarray(t, dtype=float)
        return _exprel2(t * t) / (1.0 + np.abs(t) ** theta)

    def f(t):
        t = np.asarray(t, dtype=float)
        at = np.abs(t)
        num = _exprel2(t * t)
        den = 1.0 + at**theta
        dnum = 2.0 * t * np.expm1(t * t)
        with np.errstate(invalid="ignore", divide="ignore"):
            dden = theta * np.sign(t) * np.where(at > 0, at ** (theta - 1.0), 0.0)
        return (dnum * den - num * dden) / (den * den)

    return NonlinearitySpec("exact_growth", f, F, alpha0=1.0, ar_mu=2.0,
                            params={"theta": theta})


def user_nonlinearity(f_expr: str, F_expr: Optional[str] = None,
                      alpha0: float = 1.0, ar_mu: float = 2.0) -> NonlinearitySpec:
    """Nonlinearity from expression strings; F integrated from f if omitted."""
    f_raw = parse_expression(f_expr)

    def f(t):
        return f_raw(t)

    if F_expr is not None:
        F_raw = parse_expression(F_expr)

        def F(t):
            return F_raw(t)

    else:
        cache: dict = {}

        def _F_scalar(t: float) -> float:
            key = float(t)
            if key not in cache:
                cache[key] = adaptive_simpson(f_raw, 0.0, key, tol=1e-10)
            return cache[key]

        def F(t):
            if np.ndim(t) == 0:
                return _F_scalar(float(t))
            return np.array([_F_scalar(x) for x in np.asarray(t, float).ravel()]
                            ).reshape(np.shape(t))

    return NonlinearitySpec("user", f, F, alpha0=float(alpha0), ar_mu=float(ar_mu),
                            params={"f_expr": f_expr, "F_expr": F_expr})


# --- potentials -------------------------------------------------------------

@dataclass(eq=False)
class ConstantPotential:
    gamma: float

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")

    @property
    def v0(self) -> float:
        return self.gamma

    @property
    def gamma_inf(self) -> float:
        return self.gamma

    def __call__(self, r):
        return np.full_like(np.asarray(r, dtype=float), self.gamma)


@dataclass(eq=False)
class RadialPotential:
    """Trapping-well potential: 0 < v0 = min V <= V(r_max) = gamma_inf."""

    profile: Callable
    v0: float
    gamma_inf: float

    def __call__(self, r):
        return np.asarray(self.profile(r), dtype=float)

    def validate_on(self, grid: RadialGrid):
        vals = self(grid.nodes)
        if not np.all(np.isfinite(vals)):
            raise ValueError("potential not finite on the grid")
        vmin = float(np.min(vals))
        if vmin <= 0:
            raise ValueError("potential must be positive")
        if abs(vmin - self.v0) > 1e-6 * (1.0 + abs(self.v0)):
            raise ValueError(f"declared v0={self.v0} but grid minimum is {vmin}")
        vend = float(vals[-1])
        if abs(vend - self.gamma_inf) > 1e-6 * (1.0 + abs(self.gamma_inf)):
            raise ValueError(f"declared gamma_inf={self.gamma_inf} but V(r_max)={vend}")
        if self.v0 > self.gamma_inf + 1e-12:
            raise ValueError("trapping shape requires v0 <= gamma_inf")


def radial_potential(profile: Callable, grid: RadialGrid) -> RadialPotential:
    """Build a RadialPotential with v0/gamma_inf measured on the grid."""
    vals = np.asarray(profile(grid.nodes), dtype=float)
    pot = RadialPotential(profile, float(np.min(vals)), float(vals[-1]))
    pot.validate_on(grid)
    return pot


Potential = ConstantPotential | RadialPotential


def eval_potential(pot: Potential, r) -> np.ndarray:
    """Evaluate the potential at radius r (scalar or array)."""
    if np.ndim(r) == 0 and float(r) < 0:
        raise ValueError("radius must be nonnegative")
    out = pot(r)
    return float(out) if np.ndim(r) == 0 else out


# --- problem configuration --------------------------------------------------

@dataclass(eq=False)
class ProblemConfig:
    """Operator/dimension pair with potential and nonlinearity.

    dimension=4 means the bi-harmonic operator (m=2); dimension=2 the
    Laplacian (m=1).  The standing hypothesis 0 < lam < V0 is enforced for
    the exp-critical family.
    """

    dimension: int
    lam: float
    potential: Potential
    nonlinearity: NonlinearitySpec
    overflow_cap: float = DEFAULT_OVERFLOW_CAP

    def __post_init__(self):
        if self.dimension not in (2, 4):
            raise ValueError("dimension must be 2 or 4")
        if self.nonlinearity.kind == "exp_critical":
            if not (0.0 < self.lam):
                raise ValueError("lam must be positive")
            if self.lam >= self.potential.v0 - 1e-15:
                raise ValueError(
                    f"standing hypothesis violated: lam={self.lam} >= V0={self.potential.v0}")
            if abs(self.nonlinearity.lam - self.lam) > 1e-12 * (1 + abs(self.lam)):
                raise ValueError("config lam disagrees with the nonlinearity's lam")
            want = 2.0 if self.dimension == 4 else 1.0
            if self.nonlinearity.exp_coeff != want:
                raise ValueError("exp-critical coefficient does not match the dimension")

    @property
    def order(self) -> int:
        return self.dimension // 2

    @property
    def adams_beta(self) -> float:
        return ADAMS_BETA[self.dimension]

    @property
    def gamma(self) -> float:
        return self.potential.gamma_inf


def exp_critical_config(gamma: float, lam: float, dimension: int = 4,
                        overflow_cap: float = DEFAULT_OVERFLOW_CAP) -> ProblemConfig:
    """Constant-potential exp-critical problem (the workhorse configuration)."""
    return ProblemConfig(dimension, lam, ConstantPotential(gamma),
                         exp_critical(lam, dimension), overflow_cap)


# --- pointwise evaluations ---------------------------------------------------

def eval_f(spec: NonlinearitySpec, t, cap: float = DEFAULT_OVERFLOW_CAP):
    """Evaluate f(t) under the overflow guard."""
    check_cap(t, cap)
    out = spec.f(t)
    return float(out) if np.ndim(t) == 0 else out


def eval_F(spec: NonlinearitySpec, t, cap: float = DEFAULT_OVERFLOW_CAP):
    check_cap(t, cap)
    out = spec.F(t)
    return float(out) if np.ndim(t) == 0 else out


def eval_g_lambda(config: ProblemConfig, t):
    """g_lam(t) = (lam/a)(exp(a t^2) - 1 - a t^2), cancellation-safe near 0."""
    check_cap(t, config.overflow_cap)
    a = config.nonlinearity.exp_coeff
    if a is None:
        raise ValueError("g_lambda is defined for the exp-critical family only")
    out = (config.lam / a) * _exprel2(a * np.asarray(t, dtype=float) ** 2)
    return float(out) if np.ndim(t) == 0 else out


def g_lambda_values(config: ProblemConfig, values: np.ndarray) -> np.ndarray:
    a = config.nonlinearity.exp_coeff
    return (config.lam / a) * _exprel2(a * values * values)


# --- growth-condition checker -------------------------------------------------

@dataclass
class ConditionReport:
    """Numeric check of the superquadraticity and F <= M0 f conditions."""

    worst_ratio: float        # min over the probe grid of t f(t) / F(t)
    mu: float                 # the recorded mu the ratio is compared against
    ar_holds: bool
    M0: float
    t0: float
    upper_bound_holds: bool
    alpha0_estimate: float
    critical: bool


def check_conditions(spec: NonlinearitySpec, t_grid,
                     cap: float = DEFAULT_OVERFLOW_CAP) -> ConditionReport:
    """Probe the growth conditions of (F, f) on a positive t grid."""
    t = np.asarray(t_grid, dtype=float)
    if np.any(t <= 0) or np.any(t > cap):
        raise ValueError("t_grid must lie in (0, overflow_cap]")
    t = np.sort(t)
    Fv = np.asarray(spec.F(t), dtype=float)
    fv = np.asarray(spec.f(t), dtype=float)
    if np.any(Fv <= 0):
        raise ValueError("F must be positive on the probe grid")

    ratio = t * fv / Fv
    worst = float(np.min(ratio))
    ar_holds = worst >= spec.ar_mu - 1e-9

    # fitted (t0, M0) for F <= M0 f on [t0, inf): first probe point with f > 0
    pos = fv > 0
    if np.any(pos):
        i0 = int(np.argmax(pos))
        t0 = float(t[i0])
        M0 = float(np.max(Fv[i0:] / fv[i0:]))
        upper = bool(np.all(Fv[i0:] <= M0 * fv[i0:] + 1e-12))
    else:
        t0, M0, upper = float("inf"), float("inf"), False

    # empirical critical exponent: tail slope of log f(t) against t^2
    tail = t >= t[-1] * 0.6
    with np.errstate(divide="ignore"):
        logf = np.log(np.maximum(fv[tail], 1e-300))
    x = t[tail] ** 2
    good = np.isfinite(logf)
    alpha0_est = float(np.polyfit(x[good], logf[good], 1)[0]) if np.sum(good) > 2 else 0.0
    critical = alpha0_est > 0.1

    return ConditionReport(worst, spec.ar_mu, ar_holds, M0, t0, upper,
                           alpha0_est, critical)
