import numpy as np
import pytest

import biharm as bh
from biharm.model import (OverflowCapError, adaptive_simpson, check_conditions,
                          eval_F, eval_f, eval_g_lambda, eval_potential)


@pytest.fixture(scope="module")
def cfg():
    return bh.exp_critical_config(1.0, 0.5)


def test_eval_f_exp_critical():
    spec = bh.exp_critical(0.5)
    assert eval_f(spec, 0.0) == 0.0
    assert eval_f(spec, 1.0) == pytest.approx(0.5 * np.e**2, rel=1e-12)
    assert eval_f(spec, -1.0) == pytest.approx(-0.5 * np.e**2, rel=1e-12)


def test_eval_f_overflow_guard():
    spec = bh.exp_critical(0.5)
    with pytest.raises(OverflowCapError):
        eval_f(spec, 7.0)


def test_f_F_consistency_simpson():
    # |F(t) - Simpson(f, 0, t)| <= 1e-8 (1 + |F|) across the families
    for spec in (bh.exp_critical(0.7), bh.exact_growth_family(1.0),
                 bh.user_nonlinearity("t^3")):
        for t in np.linspace(0.25, 5.0, 8):
            F_direct = float(np.asarray(eval_F(spec, t)))
            F_quad = adaptive_simpson(lambda s: float(np.asarray(spec.f(s))), 0.0, t)
            assert abs(F_direct - F_quad) <= 1e-8 * (1 + abs(F_direct))


def test_f_zero_at_zero():
    for spec in (bh.exp_critical(1.0), bh.exact_growth_family(2.0),
                 bh.user_nonlinearity("t*exp(t^2)")):
        assert abs(float(np.asarray(spec.f(0.0)))) < 1e-12


def test_g_lambda_values(cfg):
    assert eval_g_lambda(cfg, 0.0) == 0.0
    # lam=2 variant: g(1) = e^2 - 3
    cfg2 = bh.exp_critical_config(3.0, 2.0)
    assert eval_g_lambda(cfg2, 1.0) == pytest.approx(np.e**2 - 3.0, rel=1e-12)


def test_g_lambda_small_t_series(cfg):
    # 4-term Taylor oracle: g(t)/lam = t^4 + (2/3) t^6 + ...
    lam = cfg.lam
    for t in (1e-4, 1e-3, 1e-5):
        series = lam * (t**4 + (2.0 / 3.0) * t**6 + (2.0 / 6.0) * t**8)
        assert eval_g_lambda(cfg, t) == pytest.approx(series, rel=1e-6)


def test_g_lambda_large_t_expm1_form(cfg):
    for t in (0.5, 1.0, 2.5):
        direct = (cfg.lam / 2) * (np.expm1(2 * t * t)) - cfg.lam * t * t
        assert eval_g_lambda(cfg, t) == pytest.approx(direct, rel=1e-12)


def test_superquadraticity(cfg):
    # t f(t) - 2 F(t) >= 0 for the exp-critical family
    spec = cfg.nonlinearity
    t = np.geomspace(1e-3, 5.0, 200)
    vals = t * spec.f(t) - 2.0 * spec.F(t)
    assert np.all(vals >= -1e-14)


def test_potentials():
    pot = bh.ConstantPotential(1.0)
    assert eval_potential(pot, 7.0) == 1.0
    g = bh.default_grid(4)
    prof = lambda r: 1.0 - 0.4 * np.exp(-np.asarray(r, float) ** 2)
    rp = bh.radial_potential(prof, g)
    assert eval_potential(rp, 0.0) == pytest.approx(0.6)
    assert eval_potential(rp, g.r_max) >= 1.0 - 1e-6
    assert rp.v0 == pytest.approx(0.6, abs=1e-9)
    # trapping shape: minimum strictly below the boundary value
    assert rp.v0 < rp.gamma_inf


def test_potential_validation_rejects_bad_shapes():
    g = bh.default_grid(4)
    with pytest.raises(ValueError):
        bh.radial_potential(lambda r: -np.ones_like(np.asarray(r, float)), g)


def test_config_standing_hypothesis():
    with pytest.raises(ValueError):
        bh.exp_critical_config(1.0, 1.5)      # lam >= gamma
    with pytest.raises(ValueError):
        bh.exp_critical_config(1.0, 1.0)
    cfg = bh.exp_critical_config(1.0, 0.5)
    assert cfg.adams_beta == pytest.approx(32 * np.pi**2)
    cfg2 = bh.exp_critical_config(1.0, 0.5, dimension=2)
    assert cfg2.adams_beta == pytest.approx(4 * np.pi)


def test_check_conditions_exp_critical():
    spec = bh.exp_critical(1.0)
    rep = check_conditions(spec, np.geomspace(0.1, 5.0, 400))
    # the ratio t f / F decreases to 2 as t -> 0+, stays above it
    x = 2 * 0.1**2
    boundary = 2 * x / -np.expm1(-x)
    assert rep.worst_ratio == pytest.approx(boundary, rel=1e-6)
    assert rep.worst_ratio > 2.0
    assert rep.ar_holds
    assert rep.upper_bound_holds and np.isfinite(rep.M0)
    assert rep.alpha0_estimate == pytest.approx(2.0, abs=0.15)
    assert rep.critical


def test_check_conditions_exact_growth():
    rep = check_conditions(bh.exact_growth_family(1.0), np.geomspace(0.1, 5.0, 400))
    assert rep.ar_holds
    assert rep.upper_bound_holds
    assert rep.alpha0_estimate == pytest.approx(1.0, abs=0.2)


def test_check_conditions_subcritical_flagged():
    rep = check_conditions(bh.user_nonlinearity("2*t", "t^2"),
                           np.geomspace(0.1, 5.0, 400))
    assert rep.alpha0_estimate == pytest.approx(0.0, abs=0.05)
    assert not rep.critical
