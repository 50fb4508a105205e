import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from orlisov import (
    ConfigurationError, Domain, GridFunction, QuadratureScheme, YoungFunction, evaluate, fixture, full_norm,
    make_grid_function, modular_gagliardo, modular_LM, norm_LM, poincare_estimate,
    random_nodal, seminorm_gagliardo,
)
from orlisov.modular import luxemburg

from conftest import BUILTIN

D32 = Domain.interval(0.0, 1.0, 32)
S1 = QuadratureScheme(3, 6, 8)


def midpoint_double_sum(M, u, s, n=3000):
    """Brute-force domain-scope oracle: off-diagonal midpoint sum on an n x n grid."""
    x = (np.arange(n) + 0.5) / n
    ux = evaluate(u, x)
    total = 0.0
    for i0 in range(0, n, 500):
        xi, ui = x[i0:i0 + 500, None], ux[i0:i0 + 500, None]
        r = np.abs(xi - x[None, :])
        with np.errstate(divide="ignore", invalid="ignore"):
            val = M.M((ui - ux[None, :]) / r ** s) / r
        val[r == 0] = 0.0
        total += math.fsum(val.ravel())
    return total / n ** 2


def exterior_oracle(p, s, u):
    # 2 int |u|^p (x^{-ps} + (1-x)^{-ps}) / (ps) for Omega = (0, 1), N = 1
    def f(x):
        return abs(evaluate(u, x)) ** p * (x ** (-p * s) + (1 - x) ** (-p * s)) / (p * s)
    pts = D32.axes()[0][1:-1]
    val, _ = integrate.quad(f, 0, 1, points=pts, limit=400, epsabs=0, epsrel=1e-12)
    return 2 * val


@pytest.mark.parametrize("name", sorted(BUILTIN) + ["p2"])
def test_domain_modular_vs_midpoint_sum(name):
    M = BUILTIN.get(name, YoungFunction.power(2))
    u = fixture("bubble", D32)
    ref = midpoint_double_sum(M, u, 0.5)
    got = modular_gagliardo(M, u, 0.5, "domain", S1).value
    assert got == pytest.approx(ref, rel=1e-2)


@pytest.mark.parametrize("p,s", [(2.0, 0.5), (3.0, 0.3), (1.5, 0.7)])
def test_exterior_vs_analytic(p, s):
    M = YoungFunction.power(p)
    u = fixture("hat", D32)
    ext = modular_gagliardo(M, u, s, "extended", S1).value - modular_gagliardo(M, u, s, "domain", S1).value
    assert ext == pytest.approx(exterior_oracle(p, s, u), rel=1e-6)


def test_linear_fixture_exact():
    u = make_grid_function(D32, lambda x: x, zero_boundary=False)
    assert modular_gagliardo(YoungFunction.power(2), u, 0.5, "domain", S1).value == pytest.approx(1.0, abs=1e-12)


def test_linear_fixture_2d():
    # domain scope of u = x1 on the unit square, Power(2), s = 1/2, in z = x - y
    def f(b, a):
        return (1 - a) * (1 - b) * a * a / (a * a + b * b) ** 1.5
    ref = 4 * integrate.dblquad(f, 0, 1, 0, 1, epsabs=0, epsrel=1e-11)[0]
    sq = Domain.rectangle(n=(8, 8))
    u = make_grid_function(sq, lambda x, y: x, zero_boundary=False)
    got = modular_gagliardo(YoungFunction.power(2), u, 0.5, "domain").value
    assert got == pytest.approx(ref, rel=5e-4)


def test_extended_requires_conforming():
    u = make_grid_function(D32, lambda x: x, zero_boundary=False)
    with pytest.raises(ConfigurationError, match="vanishing on the boundary"):
        modular_gagliardo(YoungFunction.power(2), u, 0.5, "extended", S1)


def test_modular_LM_oracle():
    u = make_grid_function(D32, lambda x: x * (1 - x))
    val, _ = integrate.quad(lambda x: evaluate(u, x) ** 2, 0, 1, points=D32.axes()[0][1:-1], limit=200)
    assert modular_LM(YoungFunction.power(2), u, S1) == pytest.approx(val, rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.05, 20))
def test_luxemburg_is_unit_modular(seed, scale):
    u = random_nodal(D32, np.random.default_rng(seed)) * scale
    M = BUILTIN["power_sum"]
    for res in (norm_LM(M, u, S1), seminorm_gagliardo(M, u, 0.5, scheme=S1)):
        assert abs(res.modular_at_norm - 1) <= 1e-10


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.floats(-10, 10).filter(lambda c: abs(c) > 1e-3))
def test_seminorm_homogeneous(seed, c):
    M = BUILTIN["bump"]
    u = random_nodal(D32, np.random.default_rng(seed))
    a = seminorm_gagliardo(M, c * u, 0.5, scheme=S1).norm
    assert a == pytest.approx(abs(c) * seminorm_gagliardo(M, u, 0.5, scheme=S1).norm, rel=1e-9)


def test_zero_function():
    z = GridFunction.zeros(D32)
    assert modular_gagliardo(YoungFunction.power(2), z, 0.5).value == 0.0
    assert seminorm_gagliardo(YoungFunction.power(2), z, 0.5).norm == 0.0
    assert full_norm(YoungFunction.power(2), z, 0.5) == 0.0


def test_luxemburg_bisection_on_power():
    # rho(lam) = 8 / lam^3 has its unit crossing at lam = 2
    res = luxemburg(lambda lam: 8.0 / lam ** 3)
    assert res.norm == pytest.approx(2.0, rel=1e-12)


def test_scheme_refinement_converges():
    u = fixture("bubble", D32)
    base = QuadratureScheme(2, 1, 8)
    vals = [modular_gagliardo(BUILTIN["power_sum"], u, 0.5, "domain", base.refined(k)).value for k in range(5)]
    errs = np.abs(np.array(vals[:-1]) - vals[-1])
    assert np.all(np.diff(errs) < 0)


def test_poincare_dominates_bubble():
    M = YoungFunction.power(2)
    est = poincare_estimate(M, D32, 0.5, 40, 0, S1)
    u = fixture("bubble", D32)
    ratio = norm_LM(M, u, S1).norm / seminorm_gagliardo(M, u, 0.5, scheme=S1).norm
    assert est.value >= ratio


def test_full_norm_is_sum():
    M = BUILTIN["power_sum"]
    u = fixture("sine3", D32)
    total = full_norm(M, u, 0.5, scheme=S1)
    assert total == norm_LM(M, u, S1).norm + seminorm_gagliardo(M, u, 0.5, scheme=S1).norm


def test_extended_dominates_domain():
    for name in ("bubble", "hat", "sine2"):
        u = fixture(name, D32)
        ext = modular_gagliardo(BUILTIN["bump"], u, 0.5, "extended", S1)
        dom = modular_gagliardo(BUILTIN["bump"], u, 0.5, "domain", S1)
        assert ext.value >= dom.value and ext.tail_contribution >= 0


def test_poincare_nondecreasing_in_samples():
    M = YoungFunction.power(2)
    a = poincare_estimate(M, D32, 0.5, 20, 0, S1).value
    b = poincare_estimate(M, D32, 0.5, 40, 0, S1).value
    assert b >= a
