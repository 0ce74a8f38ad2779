import csv
import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hjexact.errors import EmptyInterior, GridTooSmall, NonFinite, SingularPoint
from hjexact.grid import (
    Axis,
    Field,
    GridSpec,
    InteriorMask,
    fd_gradient,
    fd_laplacian,
    fd_second,
    norms,
    sample,
    write_field_csv,
)
from hjexact.model import Free1D, LogCentral2D, PhysConsts


def test_sample_free_action():
    grid = GridSpec.uniform(0.0, 1.0, 5)
    f = sample(lambda c, t: Free1D(1.0).evaluate(c, t, PhysConsts()).S, grid, 0.0)
    assert list(f.values) == [0.0, 0.25, 0.5, 0.75, 1.0]


def test_sample_through_singular_point():
    grid = GridSpec.uniform(-1.0, 1.0, 5, dim=2)
    with pytest.raises(SingularPoint):
        sample(lambda c, t: LogCentral2D(1.0).evaluate(c, t, PhysConsts()).S, grid)


def test_sample_rejects_non_finite():
    grid = GridSpec.uniform(0.0, 1.0, 5)
    with pytest.raises(NonFinite):
        sample(lambda c, t: np.where(c[0] > 0.4, np.inf, 0.0), grid)


def test_field_is_read_only_and_checks_shape():
    grid = GridSpec.uniform(0.0, 1.0, 5)
    f = Field(grid, np.zeros(5))
    with pytest.raises(ValueError):
        f.values[0] = 1.0
    with pytest.raises(ValueError):
        Field(grid, np.zeros(4))
    with pytest.raises(NonFinite):
        Field(grid, np.array([0, 1, np.nan, 0, 0]))


def test_axis_validation():
    with pytest.raises(ValueError):
        Axis(0.0, 1.0, 1)
    with pytest.raises(ValueError):
        Axis(1.0, 0.0, 5)


def test_refined_halves_spacing():
    g = GridSpec.uniform(-1.0, 1.0, 65, dim=2)
    r = g.refined()
    assert r.shape == (129, 129)
    assert r.h[0] == pytest.approx(g.h[0] / 2)


@pytest.mark.parametrize("order", [2, 4])
def test_second_derivative_exact_on_quadratic(order):
    grid = GridSpec.uniform(-1.0, 1.0, 11)
    (x,) = grid.coords()
    lap = fd_laplacian(Field(grid, x**2), order)
    keep = InteriorMask.for_order(order).array(grid)
    assert np.allclose(lap.values[keep], 2.0, atol=1e-12)
    assert np.all(lap.values[~keep] == 0)


@pytest.mark.parametrize("order", [2, 4])
def test_laplacian_of_harmonic_quadratic_vanishes(order):
    grid = GridSpec.uniform(-1.0, 1.0, 9, dim=2)
    x, y = grid.coords()
    lap = fd_laplacian(Field(grid, x**2 - y**2), order)
    assert np.max(np.abs(lap.values)) < 1e-12


def test_fourth_order_exact_on_quartic():
    grid = GridSpec.uniform(-1.0, 1.0, 13)
    (x,) = grid.coords()
    d2 = fd_second(Field(grid, x**4 - 3 * x**3), 0, order=4)
    keep = InteriorMask.for_order(4).array(grid)
    assert np.allclose(d2.values[keep], (12 * x**2 - 18 * x)[keep], atol=1e-11)


@pytest.mark.parametrize("order", [2, 4])
def test_gradient_exact_on_matching_polynomial(order):
    grid = GridSpec.uniform(-1.0, 1.0, 11)
    (x,) = grid.coords()
    p = x**3 if order == 4 else x**2
    dp = 3 * x**2 if order == 4 else 2 * x
    (g,) = fd_gradient(Field(grid, p), order)
    keep = InteriorMask.for_order(order).array(grid)
    assert np.allclose(g.values[keep], dp[keep], atol=1e-12)


def _sin_error(n, order):
    grid = GridSpec.uniform(0.0, np.pi, n)
    (x,) = grid.coords()
    d2 = fd_second(Field(grid, np.sin(x)), 0, order)
    err = Field(grid, d2.values + np.sin(x) * InteriorMask.for_order(order).array(grid))
    return norms(err, InteriorMask.for_order(order))[0]


@pytest.mark.parametrize("order", [2, 4])
def test_convergence_rate_on_sine(order):
    ratio = _sin_error(33, order) / _sin_error(65, order)
    target = 2.0**order
    assert 0.9 * target <= ratio <= 1.1 * target


@settings(max_examples=25, deadline=None)
@given(st.floats(0.5, 3.0), st.floats(-1.0, 1.0))
def test_convergence_on_random_exponentials(k, shift):
    """Order-2 error ratio stays within 20% of 4 for smooth, non-polynomial data."""
    def err(n):
        grid = GridSpec.uniform(-1.0, 1.0, n)
        (x,) = grid.coords()
        f = np.exp(k * (x - shift))
        d2 = fd_second(Field(grid, f), 0, 2)
        keep = InteriorMask(1).array(grid)
        return norms(Field(grid, np.where(keep, d2.values - k**2 * f, 0)), InteriorMask(1))[0]

    assert 3.2 <= err(33) / err(65) <= 4.8


def test_stencil_needs_enough_nodes():
    with pytest.raises(GridTooSmall):
        fd_laplacian(Field(GridSpec.uniform(0, 1, 4), np.zeros(4)), order=4)
    with pytest.raises(GridTooSmall):
        fd_laplacian(Field(GridSpec.uniform(0, 1, 2), np.zeros(2)), order=2)


def test_norms_examples():
    grid = GridSpec.uniform(0.0, 1.0, 3)
    l2, linf = norms(Field(grid, np.array([0.0, 3.0, 0.0])), InteriorMask(1))
    assert l2 == pytest.approx(3 * np.sqrt(0.5))
    assert linf == 3.0
    big = GridSpec.uniform(0.0, 1.0, 10001)
    l2, linf = norms(Field(big, np.ones(10001)), InteriorMask(1))
    assert l2 == pytest.approx(1.0, abs=1e-4)
    assert linf == 1.0


def test_norms_empty_interior():
    grid = GridSpec.uniform(0.0, 1.0, 4)
    with pytest.raises(EmptyInterior):
        norms(Field(grid, np.ones(4)), InteriorMask(2))


@pytest.mark.parametrize("dim", [1, 2, 3])
def test_flat_index_round_trip(dim):
    grid = GridSpec(tuple(Axis(-1.0, 1.0 + i, 4 + i) for i in range(dim)))
    for flat in (0, 3, grid.size - 1):
        assert grid.flat_index(grid.node_coords(flat)) == flat
    # last axis varies fastest
    X = grid.coords().reshape(dim, -1)
    assert np.array_equal(grid.node_coords(1), X[:, 1])
    assert X[-1, 1] != X[-1, 0]


def test_csv_layout():
    grid = GridSpec(tuple([Axis(0.0, 1.0, 2), Axis(0.0, 2.0, 3)]))
    x, y = grid.coords()
    buf = io.StringIO()
    write_field_csv(buf, [Field(grid, x + 10 * y), Field(grid, x - y)], [0.0, 0.5], ("value",))
    rows = list(csv.reader(io.StringIO(buf.getvalue())))
    assert rows[0] == ["x", "y", "t", "value"]
    assert rows[1] == ["0.0", "0.0", "0.0", "0.0"]
    assert rows[2] == ["0.0", "1.0", "0.0", "10.0"]
    assert len(rows) == 1 + 2 * 6
    assert rows[7][:3] == ["0.0", "0.0", "0.5"]
    assert rows[8] == ["0.0", "1.0", "0.5", "-1.0"]


def test_csv_complex_columns():
    grid = GridSpec.uniform(0.0, 1.0, 2)
    (x,) = grid.coords()
    buf = io.StringIO()
    write_field_csv(buf, [Field(grid, x + 0.5j)], [1.0], ("re", "im"))
    assert buf.getvalue().splitlines() == ["x,t,re,im", "0.0,1.0,0.0,0.5", "1.0,1.0,1.0,0.5"]
