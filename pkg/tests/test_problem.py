import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from orlisov import (
    DomainError, GridFunction, InvalidFunctionError, Nonlinearity, YoungFunction, energy,
    energy_gradient, eval_G, eval_g, evaluate, fixture, validate_hypotheses,
)
from orlisov.operator import modular_F
from orlisov.problem import critical_exponent

P2 = YoungFunction.power(2)


def test_pure_power_pair():
    nl = Nonlinearity.pure_power(1.5)
    assert eval_G(nl, None, -4.0) == pytest.approx(8.0)
    assert eval_g(nl, None, -4.0) == pytest.approx(-3.0)
    assert (nl.C0, nl.C1, nl.C2) == (1.5, 1.0, 1.0)


@given(st.floats(-30, 30))
def test_log_power_g_is_derivative(t):
    nl = Nonlinearity.log_power(4.5)
    val, _ = integrate.quad(lambda x: eval_g(nl, None, x), 0, t, epsabs=1e-13, epsrel=1e-11)
    assert val == pytest.approx(eval_G(nl, None, t), rel=1e-8, abs=1e-12)


def test_log_power_requires_q_above_4():
    with pytest.raises(InvalidFunctionError):
        Nonlinearity.log_power(3.0)


def test_nonfinite_rejected():
    with pytest.raises(DomainError):
        eval_g(Nonlinearity.pure_power(1.5), None, math.inf)


def test_critical_exponent():
    assert critical_exponent(1.5, 2) == pytest.approx(6.0)
    assert critical_exponent(2.0, 1) == math.inf


def test_hypotheses_canonical():
    rep = validate_hypotheses(Nonlinearity.pure_power(1.5), P2, dim=1)
    assert rep.passed
    assert rep.details["p_star_guard"] == "p* guard inactive"


def test_hypotheses_p_star_guard_active():
    # m0 = 1.5 < N = 2: p* = 6 is finite, gate is q < min(6, 1.5)
    rep = validate_hypotheses(Nonlinearity.pure_power(1.2), YoungFunction.power(1.5), dim=2)
    assert rep.details["p_star"] == pytest.approx(6.0)
    assert rep.details["checks"]["gate"]


def test_hypotheses_reject_wrong_primitive():
    nl = Nonlinearity.custom(lambda x, t: 2 * np.abs(t) ** 0.5 * np.sign(t), lambda x, t: np.abs(t) ** 1.5,
                             1.5, C0=2, C1=1, C2=1)
    rep = validate_hypotheses(nl, P2)
    assert not rep.details["checks"]["primitive"]


def test_log_power_lower_constant_is_sampling_artefact():
    # G / |t|^q = log(1+t^2)/t^2 tends to 0, so C1 > 0 only on the finite sample
    nl = Nonlinearity.log_power(4.5)
    assert 0 < nl.C1 < 1e-12
    assert nl.constants_source == "estimated"


def test_energy_split(ctx_p2):
    nl = Nonlinearity.pure_power(1.5)
    u = 0.3 * fixture("sine1", ctx_p2.domain)
    e = energy(ctx_p2, nl, 0.25, u)
    assert e.modular_part == modular_F(ctx_p2, u)
    # potential part of the interpolant by adaptive quadrature
    pot, _ = integrate.quad(lambda x: abs(evaluate(u, x)) ** 1.5, 0, 1,
                            points=ctx_p2.domain.axes()[0][1:-1], limit=200)
    assert e.potential_part == pytest.approx(pot, rel=1e-6)
    assert e.total == pytest.approx(e.modular_part - 0.25 * e.potential_part, rel=1e-14)


def test_energy_at_zero(ctx_p2):
    nl = Nonlinearity.pure_power(1.5)
    z = GridFunction.zeros(ctx_p2.domain)
    assert energy(ctx_p2, nl, 1.0, z).total == 0.0
    assert not np.any(energy_gradient(ctx_p2, nl, 1.0, z))
    with pytest.raises(DomainError):
        energy(ctx_p2, nl, -1.0, z)


def test_log_power_value_and_hypotheses():
    nl = Nonlinearity.log_power(5.0)
    assert eval_G(nl, None, 1.0) == pytest.approx(math.log(2.0))
    assert eval_g(nl, None, 0.0) == 0.0 and eval_G(nl, None, 0.0) == 0.0
    assert validate_hypotheses(nl, YoungFunction.power(6.0), dim=1).passed


def test_lambda_zero_is_modular_gradient(ctx_p2):
    from orlisov import gradient_F
    u = fixture("sine2", ctx_p2.domain)
    g = energy_gradient(ctx_p2, Nonlinearity.pure_power(1.5), 0.0, u)
    assert np.array_equal(g, gradient_F(ctx_p2, u))


@pytest.mark.parametrize("lam", [0.01, 0.1, 1.0, 10.0])
def test_negative_infimum(ctx_p2, lam):
    nl = Nonlinearity.pure_power(1.5)
    b = fixture("bubble", ctx_p2.domain)
    assert any(energy(ctx_p2, nl, lam, 2.0 ** -k * b).total < 0 for k in range(60))


def test_coercive_along_rays(builtin_ctx):
    from orlisov.checks import unit_directions
    nl = Nonlinearity.pure_power(1.5)
    for v in unit_directions(builtin_ctx, 20, seed=21):
        vals = [energy(builtin_ctx, nl, 1.0, 2.0 ** k * v).total for k in range(8)]
        assert vals[-1] > vals[-2] > vals[-3]
        assert vals[-1] > 10 * abs(energy(builtin_ctx, nl, 1.0, v).total)
