import math

import numpy as np
import pytest

from plateopt.errors import GridMismatch, InvalidArgument, NumericFailure
from plateopt.grid import (
    RadialGrid,
    apply_laplacian,
    build_cartesian_grid,
    build_radial_grid,
    integrate,
    norm,
    read_csv,
    solve_poisson,
    write_csv,
)


def test_weights_sum_to_area():
    assert integrate(build_radial_grid(2.0, 100), np.ones(100)) == pytest.approx(4 * math.pi, rel=1e-14)
    g = build_cartesian_grid(2.0, 0.5, 40, 20)
    assert integrate(g, np.ones(g.size)) == pytest.approx(1.0, rel=1e-14)


def test_unit_square_quadrature_of_constant():
    g = build_cartesian_grid(1.0, 1.0, 100, 100)
    assert abs(integrate(g, g.function(lambda x, y: np.ones_like(x))) - 1.0) < 1e-2


@pytest.mark.parametrize("args", [(1.0, 15), (0.0, 50), (-1.0, 50), (1.0, 20.5)])
def test_radial_builder_rejects(args):
    with pytest.raises(InvalidArgument):
        build_radial_grid(*args)


@pytest.mark.parametrize("args", [(1.0, 1.0, 10, 32), (0.0, 1.0, 32, 32), (1.0, -2.0, 32, 32)])
def test_cartesian_builder_rejects(args):
    with pytest.raises(InvalidArgument):
        build_cartesian_grid(*args)


def test_grid_equality_is_structural():
    assert build_radial_grid(1.0, 32) == build_radial_grid(1.0, 32)
    assert build_radial_grid(1.0, 32) != build_radial_grid(1.0, 33)
    assert hash(build_cartesian_grid(1, 1, 16, 16)) == hash(build_cartesian_grid(1, 1, 16, 16))


def test_radial_laplacian_of_paraboloid():
    g = build_radial_grid(1.0, 100)
    lap = apply_laplacian(g, 1.0 - g.r**2).values
    # exact away from the outer ghost closure
    assert np.allclose(lap[:-1], -4.0, atol=1e-9)
    assert abs(lap[-1] + 4.0) < 1.0


def test_cartesian_laplacian_of_sine_product():
    errs = []
    for n in (32, 64):
        g = build_cartesian_grid(1.0, 1.0, n, n)
        f = g.function(lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y))
        lap = apply_laplacian(g, f).values
        errs.append(np.abs(lap + 2 * np.pi**2 * f.values).max() / (2 * np.pi**2))
    assert errs[0] < 1e-2
    assert math.log2(errs[0] / errs[1]) > 1.8


def test_laplacian_is_weight_symmetric(rng):
    for g in (build_radial_grid(1.0, 50), build_cartesian_grid(1.0, 2.0, 16, 24)):
        f, h = rng.normal(size=g.size), rng.normal(size=g.size)
        a = integrate(g, f * apply_laplacian(g, h).values)
        b = integrate(g, h * apply_laplacian(g, f).values)
        assert a == pytest.approx(b, rel=1e-12)


def test_radial_poisson_second_order():
    errs = []
    for n in (50, 100, 200):
        g = build_radial_grid(1.0, n)
        u = solve_poisson(g, np.full(n, 4.0)).values
        errs.append(np.abs(u - (1 - g.r**2)).max())
    orders = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert all(1.8 < p < 2.2 for p in orders)


def test_cartesian_poisson_second_order():
    errs = []
    for n in (24, 48):
        g = build_cartesian_grid(1.0, 1.0, n, n)
        exact = g.function(lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y)).values
        u = solve_poisson(g, 2 * np.pi**2 * exact).values
        errs.append(np.abs(u - exact).max())
    assert math.log2(errs[0] / errs[1]) > 1.8


def test_discrete_maximum_principle(rng):
    for g in (build_radial_grid(1.0, 80), build_cartesian_grid(1.0, 1.0, 30, 30)):
        f = rng.uniform(size=g.size) * (rng.uniform(size=g.size) < 0.1)
        assert solve_poisson(g, f).values.min() >= 0.0


def test_poisson_zero_rhs():
    g = build_radial_grid(1.0, 20)
    assert not np.any(solve_poisson(g, np.zeros(20)).values)


def test_poisson_nonfinite_rhs_fails():
    g = build_radial_grid(1.0, 20)
    rhs = np.ones(20)
    rhs[3] = np.nan
    with pytest.raises(NumericFailure) as info:
        solve_poisson(g, rhs)
    assert not np.isfinite(info.value.residual) or info.value.residual > 0


def test_grid_mismatch():
    a, b = build_radial_grid(1.0, 20), build_radial_grid(1.0, 21)
    with pytest.raises(GridMismatch):
        integrate(a, b.zeros())
    with pytest.raises(GridMismatch):
        a.zeros() + b.zeros()
    with pytest.raises(GridMismatch):
        integrate(a, np.ones(5))


def test_norm_of_constant():
    g = build_radial_grid(1.0, 40)
    assert norm(g, np.ones(40)) == pytest.approx(math.sqrt(math.pi), rel=1e-14)


def test_gridfunction_is_read_only():
    f = build_radial_grid(1.0, 20).function(np.ones(20))
    with pytest.raises(ValueError):
        f.values[0] = 2.0


@pytest.mark.parametrize("grid", [
    build_radial_grid(1.5, 33),
    RadialGrid(np.sqrt(np.linspace(0, 1, 21))),
    build_cartesian_grid(1.0, 2.0, 16, 17),
])
def test_csv_round_trip(tmp_path, rng, grid):
    f = grid.function(rng.normal(size=grid.size))
    write_csv(f, tmp_path / "f.csv")
    back = read_csv(tmp_path / "f.csv")
    assert back.grid == grid
    assert np.array_equal(back.values, f.values)


@pytest.mark.parametrize("text", ["", "hexagon,1,2\n1\n", "radial,1.0,20\n1\n2\n", "radial,abc,20\n"])
def test_read_csv_malformed(tmp_path, text):
    p = tmp_path / "bad.csv"
    p.write_text(text)
    with pytest.raises(InvalidArgument):
        read_csv(p)
