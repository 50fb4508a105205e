import math

import numpy as np
import pytest
from scipy import integrate

from orlisov import (
    ConfigurationError, Domain, DomainError, GridFunction, Nonlinearity, SolverConfig, WeakFormContext,
    YoungFunction, apply_weak, energy, energy_gradient, estimate_c1, evaluate, fixture, lambda_star, minimize,
    mountain_pass, solve_two,
)
from orlisov.checks import unit_directions
from orlisov.solver import lq_norm, provisional_geometry, ring_positivity

P2 = YoungFunction.power(2)


def _bump_rhs():
    # G ~ t^4 near 0 and ~ t^1.5 at infinity: a barrier around 0 plus coercivity
    def G(x, t):
        return t ** 4 / (1 + t * t) ** 1.25

    def g(x, t):
        return t ** 3 * (4 + 1.5 * t * t) / (1 + t * t) ** 2.25
    return Nonlinearity.custom(g, G, 1.5, C0=4.0, C1=1e-300, C2=1.0, name="quartic_bump")


def test_lq_norm_oracle():
    d = Domain.interval(n=16)
    u = fixture("hat", d)
    val, _ = integrate.quad(lambda x: abs(evaluate(u, x)) ** 3, 0, 1, points=[0.5])
    assert lq_norm(u, 3.0) == pytest.approx(val ** (1 / 3), rel=1e-12)


def test_lambda_star_formula():
    nl = Nonlinearity.pure_power(1.5)
    M = YoungFunction.power_sum(2, 3)
    g = lambda_star(M, nl, 0.5, 2.0)
    assert g.exponent == 3  # rho < 1 uses the upper index
    assert g.lambda_star == pytest.approx(0.5 ** 1.5 / (3 * 2.0 ** 1.5))
    assert g.alpha == pytest.approx(0.5 ** 1.5 / 3)
    assert g.alpha_lower == pytest.approx(2 / 3 * 0.5 ** 3)
    assert lambda_star(M, nl, 2.0, 2.0).exponent == 2
    # the sphere estimate at lambda* itself equals alpha_lower
    assert g.ring_bound(g.lambda_star, 1.0, 2.0, 1.5) == pytest.approx(g.alpha_lower)


def test_lambda_star_example():
    g = lambda_star(P2, Nonlinearity.pure_power(1.5), 0.5, 1.0)
    assert g.lambda_star == pytest.approx(0.5 ** 0.5 / 3, rel=1e-14)
    assert lambda_star(P2, Nonlinearity.pure_power(1.5), 0.25, 1.0).lambda_star < g.lambda_star
    with pytest.raises(DomainError):
        lambda_star(P2, Nonlinearity.pure_power(1.5), 0.0, 1.0)


def test_c1_estimate():
    d = Domain.interval(0.0, 1.0, 64)
    vals = [estimate_c1(P2, d, 1.5, 0.5, 32, seed) for seed in range(3)]
    assert max(v.value for v in vals) <= 1.1 * min(v.value for v in vals)
    more = estimate_c1(P2, d, 1.5, 0.5, 64, 0)
    assert more.raw_max >= vals[0].raw_max
    assert np.all(vals[0].ratios <= vals[0].value)


def test_minimize_canonical(ctx_p2):
    nl = Nonlinearity.pure_power(1.5)
    cfg = SolverConfig()
    res = minimize(ctx_p2, nl, 0.1, cfg)
    assert res.converged and res.energy.total < 0
    g = energy_gradient(ctx_p2, nl, 0.1, res.u)
    assert np.max(np.abs(g)) == res.residual
    assert res.residual <= cfg.grad_tol
    # sign and symmetry of the minimizer
    vals = res.u.interior
    assert np.all(vals > 0)
    assert np.allclose(vals, vals[::-1], rtol=1e-4)
    # Armijo: energies never increase
    assert np.all(np.diff(res.history) <= 0)
    # local minimality probe
    h = 1e-3 * np.abs(vals).max()
    for v in unit_directions(ctx_p2, 10, seed=3):
        for sgn in (1, -1):
            assert energy(ctx_p2, nl, 0.1, res.u + sgn * h * v).total >= res.energy.total - cfg.grad_tol * h


def test_minimize_respects_start(ctx_p2):
    nl = Nonlinearity.pure_power(1.5)
    start = 1e-3 * fixture("bubble", ctx_p2.domain)
    res = minimize(ctx_p2, nl, 0.1, start=start)
    assert res.energy.total <= energy(ctx_p2, nl, 0.1, start).total


def test_mountain_pass_positive_control(ctx_p2):
    nl = _bump_rhs()
    lam = 100.0
    res1 = minimize(ctx_p2, nl, lam)
    assert res1.converged and res1.energy.total < 0
    mp = mountain_pass(ctx_p2, nl, lam, res1.u)
    assert mp.ok, mp.message
    assert mp.energy.total > 0
    assert mp.residual <= 1e-6
    assert mp.lowest_eigenvalue < 0  # a saddle, not a minimum
    assert np.max(np.abs(mp.u.interior - res1.u.interior)) > 1e-6
    assert np.all(np.diff(mp.path_max_history) <= 1e-12 * abs(mp.path_max_history[0]))
    # stationarity in weak-form terms, hat function by hat function
    ct = ctx_p2.cells
    for k in (0, 10, 20, 30):
        e = np.zeros(ctx_p2.domain.n_interior)
        e[k] = 1.0
        phi = GridFunction.from_interior(ctx_p2.domain, e)
        load = ct.integrate(nl.g(ct.points, ct.B @ mp.u.flat) * (ct.B @ phi.flat))
        assert abs(apply_weak(ctx_p2, mp.u, phi) - lam * load) <= 1e-6


def test_mountain_pass_rejects_bad_endpoint(ctx_p2):
    mp = mountain_pass(ctx_p2, Nonlinearity.pure_power(1.5), 0.1, GridFunction.zeros(ctx_p2.domain))
    assert mp.status == "invalid_endpoint" and mp.u is None


def test_ring_above_corrected_level(ctx_p2):
    # the level (2/3) rho^e that the sphere estimate guarantees below lambda*
    nl = Nonlinearity.pure_power(1.5)
    geo = provisional_geometry(ctx_p2, nl).geometry
    probe = ring_positivity(ctx_p2, nl, 0.5 * geo.lambda_star, geo.rho, 50)
    assert probe.min_energy >= geo.alpha_lower


def test_solve_two_refuses(ctx_p2):
    rep = solve_two(ctx_p2, Nonlinearity.pure_power(1.5), lam=1.0)
    assert rep.status == "refused" and rep.u1 is None
    assert any("not below lambda*" in m for m in rep.messages)


def test_solve_two_refuses_bad_q(ctx_p2):
    rep = solve_two(ctx_p2, Nonlinearity.pure_power(2.5))
    assert rep.status == "refused"
    assert math.isnan(rep.lambda_star)


def test_solver_config_validation():
    with pytest.raises(ConfigurationError):
        SolverConfig(path_points=4)
    with pytest.raises(ConfigurationError):
        SolverConfig(armijo_c=1.5)
    assert SolverConfig(rel_tol=None).tolerance(1e-12) == 1e-6
    assert SolverConfig().tolerance(1e-3) == pytest.approx(1e-9)


def test_solve_two_report_rows(ctx_p2):
    rep = solve_two(ctx_p2, Nonlinearity.pure_power(1.5))
    keys = [k for k, _ in rep.rows()]
    assert keys[0] == "status" and "lambda_star" in keys and "messages" in keys
    assert rep.status in ("ok", "partial")
    assert rep.I1.total < 0


def test_2d_minimize_smoke():
    ctx = WeakFormContext(P2, 0.5, Domain.rectangle(n=(4, 4)))
    res = minimize(ctx, Nonlinearity.pure_power(1.5), 0.1)
    assert res.converged and res.energy.total < 0
