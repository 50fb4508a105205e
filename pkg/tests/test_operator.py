import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from orlisov import (
    ConfigurationError, Domain, GridFunction, QuadratureScheme, WeakFormContext, YoungFunction,
    apply_weak, gradient_F, monotonicity_probe, random_nodal,
)
from orlisov.checks import check_directional_derivative, unit_directions
from orlisov.operator import modular_F

D = Domain.interval(0.0, 1.0, 32)
SQ = Domain.rectangle(n=(4, 4))
ints = st.integers(0, 100_000)


def test_power2_weak_form_is_bilinear(ctx_p2):
    # for M = t^2 the weak form is 2 <u, v>_H and symmetric
    u, v, w = unit_directions(ctx_p2, 3, seed=5)
    assert apply_weak(ctx_p2, u, v) == pytest.approx(apply_weak(ctx_p2, v, u), rel=1e-12)
    assert apply_weak(ctx_p2, u, u) == pytest.approx(2 * modular_F(ctx_p2, u), rel=1e-12)
    lhs = apply_weak(ctx_p2, u, v + 3 * w)
    assert lhs == pytest.approx(apply_weak(ctx_p2, u, v) + 3 * apply_weak(ctx_p2, u, w), rel=1e-10, abs=1e-12)


def test_gradient_pairs_with_hat_functions(builtin_ctx):
    u = 2.0 * unit_directions(builtin_ctx, 1, seed=9)[0]
    g = gradient_F(builtin_ctx, u)
    for k in (0, 7, len(g) - 1):
        e = np.zeros(D.n_interior)
        e[k] = 1.0
        assert g[k] == pytest.approx(apply_weak(builtin_ctx, u, GridFunction.from_interior(D, e)), rel=1e-10)


def test_gradient_fd_2d():
    ctx = WeakFormContext(YoungFunction.power_sum(2, 4), 0.4, SQ)
    assert check_directional_derivative(ctx, n=3, seed=1).passed


@settings(max_examples=30, deadline=None)
@given(ints, ints, st.floats(0.1, 5))
def test_monotone(builtin_ctx, seed_u, seed_v, scale):
    u = random_nodal(D, np.random.default_rng(seed_u)) * scale
    v = random_nodal(D, np.random.default_rng(seed_v))
    assert monotonicity_probe(builtin_ctx, u, v) >= -1e-9


@settings(max_examples=30, deadline=None)
@given(ints, ints)
def test_convexity_gap(builtin_ctx, seed_u, seed_v):
    u = random_nodal(D, np.random.default_rng(seed_u))
    v = random_nodal(D, np.random.default_rng(seed_v))
    gap = modular_F(builtin_ctx, v) - modular_F(builtin_ctx, u) - gradient_F(builtin_ctx, u) @ (v - u).interior
    assert gap >= -1e-9


def test_zero_gradient_at_zero(ctx_p2):
    assert not np.any(gradient_F(ctx_p2, GridFunction.zeros(D)))


def test_context_validation():
    with pytest.raises(ConfigurationError):
        WeakFormContext(YoungFunction.power(2), 1.0, D)
    with pytest.raises(ConfigurationError):
        WeakFormContext(YoungFunction.power(2), 0.5, D, scope="global")
    ctx = WeakFormContext(YoungFunction.power(2), 0.5, D)
    with pytest.raises(ConfigurationError):
        modular_F(ctx, GridFunction.zeros(Domain.interval(n=8)))


def test_thread_count_does_not_change_bits(monkeypatch):
    # a table large enough to span several reduction blocks
    dom = Domain.interval(0.0, 1.0, 96)
    u = random_nodal(dom, np.random.default_rng(0))
    vals = []
    for threads in ("1", "4"):
        monkeypatch.setenv("ORLISOV_THREADS", threads)
        ctx = WeakFormContext(YoungFunction.bump_power(1.5), 0.5, dom, QuadratureScheme(3, 6, 8))
        assert ctx.table.D.shape[0] > 2 * (1 << 15)
        vals.append((modular_F(ctx, u), gradient_F(ctx, u).tobytes()))
    assert vals[0] == vals[1]
