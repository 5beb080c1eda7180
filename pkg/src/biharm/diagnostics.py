"""Numeric classifiers for the exponential growth conditions.

``classify_growth`` estimates, by log-log tail regression, the two limits

    limsup_{t->inf}  t^2 exp(-t^2/K) g(t)      and      limsup_{t->0} g(t)/t^2

and turns them into verdicts for the boundedness condition (both limits
finite) and the compactness condition (both limits zero).  Verdicts are
estimates, never proofs: the classifier distinguishes the exponential order
of g from the polynomial prefactor, and reports the razor's-edge case
(exponential order exactly 1/K, where the t^2-weighted limit diverges only
polynomially) as ``inconclusive`` with a finite exponential-order estimate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grid import RadialField

SLOPE_TOL = 0.05     # per decade, the stability threshold for a trend


@dataclass
class GrowthClassification:
    K: float
    limsup_infinity: float       # estimate of lim t^2 exp(-t^2/K) g(t); inf if diverging
    limsup_origin: float         # estimate of lim g(t)/t^2; inf if diverging
    bounded_verdict: str         # "holds" | "fails" | "inconclusive"
    compact_verdict: str
    infinity_boundary: bool      # exponential order matched 1/K exactly
    exp_order_estimate: float    # fitted d log g / d t^2 on the tail


def _tail_fit(x: np.ndarray, y: np.ndarray):
    """Least-squares slope/intercept of y vs x with basic sanity filtering."""
    good = np.isfinite(x) & np.isfinite(y)
    if np.sum(good) < 3:
        return np.nan, np.nan
    A = np.vstack([x[good], np.ones(np.sum(good))]).T
    sol, *_ = np.linalg.lstsq(A, y[good], rcond=None)
    return float(sol[0]), float(sol[1])


def classify_growth(gfun: Callable, K: float, t_probe=None) -> GrowthClassification:
    """Classify g against the K-dependent growth conditions.

    t_probe defaults to 400 log-spaced points on [1e-4, t_max] with t_max
    detected dynamically from overflow of g.
    """
    if K <= 0:
        raise ValueError("K must be positive")
    if t_probe is None:
        t_max = 10.0
        while t_max > 1.0:
            with np.errstate(over="ignore", invalid="ignore"):
                val = float(np.asarray(gfun(t_max), dtype=float))
            if np.isfinite(val):
                break
            t_max *= 0.8
        t_probe = np.geomspace(1e-4, t_max, 400)
    t = np.sort(np.asarray(t_probe, dtype=float))
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        gv = np.asarray(gfun(t), dtype=float)
    if not np.any(np.isfinite(gv)):
        raise ValueError("g is not evaluable on the probe range")

    n = len(t)
    tail = slice(int(0.75 * n), n)      # last 25% of the log-spaced probes
    far = slice(int(0.9 * n), n)        # top decade, for the exponential order
    head = slice(0, max(int(0.25 * n), 4))
    logt = np.log10(t)

    # --- behavior at infinity: first the exponential order of g itself
    with np.errstate(divide="ignore", invalid="ignore"):
        logg = np.log(np.maximum(gv, 1e-300))
    order, _ = _tail_fit(t[far] ** 2, logg[far])          # d log g / d t^2
    y_inf = t**2 * np.exp(-t**2 / K) * gv
    with np.errstate(divide="ignore", invalid="ignore"):
        logy = np.log10(np.maximum(y_inf, 1e-300))
    slope_inf, _ = _tail_fit(logt[tail], logy[tail])

    inf_boundary = False
    order_band = 0.02 / K               # 2% relative band around the critical rate
    if not np.isfinite(order):
        limsup_inf, inf_state = float("inf"), "fails"
    elif order > 1.0 / K + order_band:
        # genuinely larger exponential order: diverges exponentially
        limsup_inf, inf_state = float("inf"), "fails"
    elif order < 1.0 / K - order_band:
        limsup_inf, inf_state = 0.0, "holds"
    else:
        # exponential orders match: the polynomial factor decides
        if slope_inf > SLOPE_TOL:
            # t^2-weighted probe diverges polynomially: boundary case
            ratio = np.exp(-t[far] ** 2 / K) * gv[far]
            limsup_inf = float(np.exp(np.mean(np.log(np.maximum(ratio, 1e-300)))))
            inf_state = "boundary"
            inf_boundary = True
        elif slope_inf < -SLOPE_TOL:
            limsup_inf, inf_state = 0.0, "holds"
        else:
            limsup_inf = float(np.exp(np.mean(np.log(np.maximum(y_inf[far], 1e-300)))))
            inf_state = "boundary"
            inf_boundary = True

    # --- behavior at the origin
    with np.errstate(divide="ignore", invalid="ignore"):
        y0 = gv / t**2
        logy0 = np.log10(np.maximum(y0, 1e-300))
    slope0, icept0 = _tail_fit(logt[head], logy0[head])
    if not np.isfinite(slope0):
        limsup_0, origin_state = float("inf"), "fails"
    elif slope0 < -SLOPE_TOL:
        # grows as t -> 0
        limsup_0, origin_state = float("inf"), "fails"
    elif slope0 > SLOPE_TOL:
        limsup_0, origin_state = 0.0, "holds"
    else:
        limsup_0 = float(np.exp(np.mean(np.log(np.maximum(y0[head], 1e-300)))))
        origin_state = "boundary"

    states = (inf_state, origin_state)
    if "fails" in states:
        bounded = "fails"
    elif states == ("holds", "holds"):
        bounded = "holds"
    else:
        bounded = "inconclusive"   # an exact-boundary finite limit

    # compactness requires both limits to vanish; a finite nonzero limit fails it
    if "fails" in states or "boundary" in states:
        compact = "fails"
    elif states == ("holds", "holds"):
        compact = "holds"
    else:
        compact = "inconclusive"

    # invariant: compact holds implies bounded holds
    if compact == "holds":
        bounded = "holds"

    return GrowthClassification(float(K), limsup_inf, limsup_0, bounded, compact,
                                inf_boundary, float(order) if np.isfinite(order) else float("nan"))


def bounded_functional_probe(gfun: Callable, K: float, trial_fields,
                             adams_beta: float = 32.0 * np.pi**2) -> dict:
    """max over admissible trials of int g(u) / int u^2 under the D-norm budget.

    Trials with quadratic form exceeding adams_beta * K are skipped and
    reported.  Growing maxima along a concentration family exhibit blow-up,
    stable maxima exhibit boundedness.
    """
    from . import grid as g

    ratios, skipped = [], []
    for i, fld in enumerate(trial_fields):
        q = g.quad_form_sq(fld)
        if q > adams_beta * K * (1.0 + 1e-9):
            skipped.append((i, q))
            continue
        l2 = g.l2_sq(fld)
        if l2 == 0.0:
            ratios.append(0.0)
            continue
        gq = float(np.dot(fld.grid.weights,
                          np.asarray(gfun(np.abs(fld.values)), dtype=float)))
        ratios.append(gq / l2)
    return {"max_ratio": max(ratios) if ratios else 0.0,
            "ratios": ratios, "skipped": skipped}
