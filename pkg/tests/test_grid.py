import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from orlisov import (
    ConfigurationError, DomainError, Domain, GridFunction, YoungFunction, evaluate, fixture,
    make_grid_function, random_unit_direction, read_csv, seminorm_gagliardo, write_csv,
)
from orlisov.grid import from_csv, to_csv

SQUARE = Domain.rectangle(bounds=((0.0, 1.0), (0.0, 2.0)), n=(4, 6))


def test_interval_layout():
    d = Domain.interval(-1.0, 2.0, 6)
    assert d.n_nodes == 7 and d.n_interior == 5
    assert np.allclose(d.h, [0.5])
    assert d.tail_radius == pytest.approx(12.0)


def test_rectangle_layout():
    assert SQUARE.node_shape == (5, 7)
    assert SQUARE.n_interior == 3 * 5
    assert SQUARE.measure == pytest.approx(2.0)


@pytest.mark.parametrize("kwargs", [
    dict(dim=3, bounds=((0, 1),) * 3, n_cells=(2,) * 3, tail_radius=9.0),
    dict(dim=1, bounds=((1, 1),), n_cells=(4,), tail_radius=9.0),
    dict(dim=1, bounds=((0, 1),), n_cells=(1,), tail_radius=9.0),
    dict(dim=1, bounds=((0, 1),), n_cells=(4,), tail_radius=0.5),
])
def test_domain_rejects(kwargs):
    with pytest.raises(ConfigurationError):
        Domain(**kwargs)


def test_grid_function_is_immutable():
    u = fixture("bubble", Domain.interval())
    with pytest.raises(AttributeError):
        u.values = None
    with pytest.raises(ValueError):
        u.values[3] = 1.0


def test_nonfinite_rejected():
    with pytest.raises(DomainError):
        GridFunction(Domain.interval(n=4), [0, 1, np.nan, 0, 0])


@pytest.mark.parametrize("name", ["bubble", "hat", "sine1", "sine2", "sine3"])
def test_fixtures_conform(name):
    for dom in (Domain.interval(), SQUARE):
        u = fixture(name, dom)
        assert u.conforming and not u.is_zero()


def test_unknown_fixture():
    with pytest.raises(ConfigurationError, match="unknown fixture"):
        fixture("nope", SQUARE)


@settings(max_examples=40)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3),
       st.lists(st.tuples(st.floats(0, 1), st.floats(0, 2)), min_size=1, max_size=10))
def test_bilinear_reproduced(a, b, c, pts):
    # affine-times-affine is reproduced exactly by multilinear interpolation
    u = make_grid_function(SQUARE, lambda x, y: a + b * x + c * x * y, zero_boundary=False)
    pts = np.array(pts)
    assert np.allclose(evaluate(u, pts), a + b * pts[:, 0] + c * pts[:, 0] * pts[:, 1], atol=1e-12)


def test_evaluate_zero_outside():
    u = fixture("bubble", Domain.interval())
    assert evaluate(u, -0.1) == 0.0 and evaluate(u, 1.5) == 0.0
    assert evaluate(u, 0.5) == pytest.approx(1.0)


def test_arithmetic():
    d = Domain.interval(n=8)
    u, v = fixture("bubble", d), fixture("hat", d)
    assert np.array_equal((u + v - v).values, u.values)
    assert np.array_equal((2 * u / 2).values, u.values)
    assert np.array_equal((-u).values, -u.values)
    with pytest.raises(ConfigurationError):
        u + fixture("hat", Domain.interval(n=4))


def test_csv_roundtrip(tmp_path):
    u = random_unit_direction(SQUARE, 3, YoungFunction.power(2), 0.5)
    path = tmp_path / "u.csv"
    write_csv(u, path)
    assert np.array_equal(read_csv(path, SQUARE).values, u.values)
    with pytest.raises(ConfigurationError):
        from_csv(to_csv(u), Domain.rectangle(n=(4, 6)))


def test_unit_direction():
    d = Domain.interval()
    M = YoungFunction.power_sum(2, 4)
    v = random_unit_direction(d, 11, M, 0.3)
    assert v.conforming
    assert seminorm_gagliardo(M, v, 0.3).norm == pytest.approx(1.0, rel=1e-9)
    assert np.array_equal(v.values, random_unit_direction(d, 11, M, 0.3).values)
