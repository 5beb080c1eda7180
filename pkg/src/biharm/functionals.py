"""Energy and constraint functionals, and the exponential-ratio search.

For the exp-critical family on R^4 (a = 2):

    I(u) = 1/2 (||Du||^2 + int V u^2) - (lam/4) int (exp(2u^2) - 1)
    G(u) = (gamma - lam) ||u||^2 - int g_lam(u)        (Pohozaev, no Du term)
    N(u) = ||Du||^2 + int V u^2 - lam int exp(2u^2) u^2 (Nehari)

with 2-D analogues (a = 1, Dirichlet energy instead of ||Du||^2).  All
integrals are shared through one exponential-mass evaluation, so algebraic
identities between the reported numbers hold to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import grid as g
from .grid import RadialField, RadialGrid
from .model import OverflowCapError, ProblemConfig, check_cap, g_lambda_values


@dataclass
class MassTerms:
    l2_sq: float
    lap_l2_sq: float
    pot_l2_sq: float
    exp_mass: float       # int (exp(a u^2) - 1)
    exp_weighted: float   # int exp(a u^2) u^2
    F_mass: float         # int F(u)


@dataclass
class FunctionalReport:
    energy_I: float
    pohozaev_G: float
    nehari_N: float
    mass_terms: MassTerms


def potential_values(config: ProblemConfig, gridobj: RadialGrid) -> np.ndarray:
    return np.asarray(config.potential(gridobj.nodes), dtype=float)


def evaluate_all(u: RadialField, config: ProblemConfig) -> FunctionalReport:
    """All functionals of a field by shared quadrature.

    For dimension 2 the quadratic term is the Dirichlet energy int |u'|^2;
    the Pohozaev functional uses the limiting constant gamma = V(r_max).
    """
    check_cap(u.values, config.overflow_cap)
    w = u.grid.weights
    vals = u.values
    spec = config.nonlinearity

    quad = g.quad_form_sq(u)
    l2 = float(np.dot(w, vals * vals))
    V = potential_values(config, u.grid)
    pot = float(np.dot(w, V * vals * vals))

    if spec.kind == "exp_critical":
        a = spec.exp_coeff
        E = np.exp(a * vals * vals)
        exp_mass = float(np.dot(w, np.expm1(a * vals * vals)))
        exp_weighted = float(np.dot(w, E * vals * vals))
        F_mass = config.lam / (2.0 * a) * exp_mass
        energy = 0.5 * (quad + pot) - config.lam / (2.0 * a) * exp_mass
        gamma = config.gamma
        G = (gamma - config.lam) * l2 - float(np.dot(w, g_lambda_values(config, vals)))
        N = quad + pot - config.lam * exp_weighted
    else:
        a = spec.alpha0
        exp_mass = float(np.dot(w, np.expm1(a * vals * vals)))
        exp_weighted = float(np.dot(w, np.exp(a * vals * vals) * vals * vals))
        F_mass = float(np.dot(w, np.asarray(spec.F(vals), dtype=float)))
        fu = float(np.dot(w, np.asarray(spec.f(vals), dtype=float) * vals))
        energy = 0.5 * (quad + pot) - F_mass
        G = config.gamma * l2 - 2.0 * F_mass
        N = quad + pot - fu

    terms = MassTerms(l2, quad, pot, exp_mass, exp_weighted, F_mass)
    return FunctionalReport(energy, G, N, terms)


def nehari_energy_identity_gap(u: RadialField, config: ProblemConfig) -> float:
    """|I(u) - on-manifold energy form|; equals |N(u)|/2 algebraically.

    The on-manifold form is (lam/(2a)) int (a exp(a u^2) 2 u^2/2 ... )
    i.e. lam/4 int (exp(2u^2) 2u^2 - (exp(2u^2)-1)) for a = 2.
    """
    rep = evaluate_all(u, config)
    a = config.nonlinearity.exp_coeff
    if a is None:
        raise ValueError("identity is defined for the exp-critical family")
    rhs = 0.5 * config.lam * rep.mass_terms.exp_weighted \
        - config.lam / (2.0 * a) * rep.mass_terms.exp_mass
    return abs(rep.energy_I - rhs)


# --- exponential-ratio (sharp-constant) search --------------------------------

@dataclass
class AdamsRatioReport:
    """Lower-bound evidence for sup 2 int F(u) / ||u||^2 under ||Du||^2 <= L."""

    L: float
    ratio_lower_bound: float
    argmax_family_params: dict
    threshold_R: float
    verdict: str              # "finite_evidence" | "divergence_evidence"
    trace: dict


def _ratio_of(values: np.ndarray, gridobj: RadialGrid, config: ProblemConfig,
              L: float) -> tuple[float, float]:
    """Rescale amplitude so the quadratic form equals L, then 2 int F / ||u||^2.

    Returns (ratio, amplitude); raises OverflowCapError through check_cap if
    the rescaled candidate exceeds the cap.
    """
    u = RadialField(gridobj, values)
    q = g.quad_form_sq(u)
    if q <= 0:
        raise ValueError("degenerate candidate")
    scale = np.sqrt(L / q)
    vals = values * scale
    check_cap(vals, config.overflow_cap)
    w = gridobj.weights
    l2 = float(np.dot(w, vals * vals))
    F_mass = float(np.dot(w, np.asarray(config.nonlinearity.F(vals), dtype=float)))
    return 2.0 * F_mass / l2, float(np.max(np.abs(vals)))


def adams_ratio_search(config: ProblemConfig, L: float, budget: int = 400) -> AdamsRatioReport:
    """Maximize the ratio over Gaussian bumps and concentrating log-profiles.

    Gaussian candidates are rescaled so the quadratic form equals L exactly
    and give the certified lower bound.  The concentration sweep follows the
    family's own budget: the log-profiles carry an O(1/b^2) excess over
    adams_beta*K, and rescaling them down to L *exactly* suppresses the
    critical exponential mass by a constant factor of order exp(-c*K) that
    hides the divergence at any reachable height; evaluating them unrescaled,
    with budgets converging to L from above, reproduces the asymptotic
    pattern the family exists to exhibit.  Divergence evidence = monotone,
    non-saturating ratio growth along that sweep while the budgets approach
    L.  Verdicts are evidence, never proofs.
    """
    from .sequences import MoserParams, moser_field  # local import, no cycle

    if L <= 0:
        raise ValueError("L must be positive")
    evals = 0
    best = (-np.inf, {})
    gauss_trace, moser_trace = [], []

    base = g.default_grid(config.dimension)
    for sigma in np.geomspace(0.3, 6.0, 24):
        if evals >= budget:
            break
        evals += 1
        try:
            vals = np.exp(-((base.nodes / sigma) ** 2))
            ratio, amp = _ratio_of(vals, base, config, L)
        except (OverflowCapError, ValueError):
            continue
        gauss_trace.append((float(sigma), ratio))
        if ratio > best[0]:
            best = (ratio, {"family": "gaussian", "sigma": float(sigma), "amplitude": amp})

    # concentration sweep: ||D psi_b||^2 = adams_beta * K + O(1/b^2), K = L / beta
    K = L / config.adams_beta
    for b in (2.5, 3.0, 3.5, 4.0, 4.5, 5.0, 5.5):
        if evals >= budget:
            break
        if b + 2.0 * K / b > config.overflow_cap:
            break
        r14 = float(np.exp(-b * b / (4.0 * K)))
        if r14 < 1e-5:
            break                      # concentration scale below resolvable range
        n_pts = int(np.ceil(2.5 / (r14 / 10.0))) + 1
        if n_pts > 8_000_000:
            break
        evals += 1
        gr = g.build_grid(2.5, max(n_pts, 512), config.dimension)
        psi = moser_field(MoserParams.moser(b, K), gr)
        quad = g.quad_form_sq(psi)
        w_psi = gr.weights
        l2 = float(np.dot(w_psi, psi.values**2))
        F_mass = float(np.dot(w_psi, np.asarray(config.nonlinearity.F(psi.values),
                                                dtype=float)))
        ratio = 2.0 * F_mass / l2
        moser_trace.append((float(b), ratio, float(quad)))
        if quad <= L * (1.0 + 1e-9) and ratio > best[0]:
            best = (ratio, {"family": "moser", "b": float(b), "K": float(K),
                            "amplitude": float(np.max(np.abs(psi.values)))})

    if not np.isfinite(best[0]):
        if not moser_trace:
            raise RuntimeError("budget exhausted without any feasible candidate")
        best = (0.0, {})

    verdict = "finite_evidence"
    if len(moser_trace) >= 3:
        rs = np.array([r for _, r, _ in moser_trace])
        qs = np.array([q for _, _, q in moser_trace])
        incr = np.diff(rs)
        growing = bool(np.all(incr[-3:] > 0))
        rel = incr[-1] / max(rs[-2], 1e-300)
        # budgets decrease toward L with the excess substantially consumed
        budgets_converge = bool(np.all(np.diff(qs) < 0)) \
            and (qs[-1] - L) < 0.8 * max(qs[0] - L, 1e-300)
        if growing and rel > 0.02 and rs[-1] > 1.5 * rs[0] and budgets_converge:
            verdict = "divergence_evidence"

    threshold = config.adams_beta / config.nonlinearity.alpha0
    return AdamsRatioReport(float(L), float(best[0]), best[1], float(threshold),
                            verdict, {"gaussian": gauss_trace, "moser": moser_trace})
