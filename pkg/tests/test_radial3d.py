import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wavectl.numerics import Grid2D, leapfrog_solve
from wavectl.radial3d import (
    RecoveryError,
    check_dimension,
    recover_point,
    reduce,
    reduce_and_solve,
    solve_radial3d,
    sphere_rule,
    spherical_mean,
)

GAUSS = "exp(-(x^2 + y^2 + z^2))"
CUBE = list(itertools.product([-1.0, 0.0, 1.0], repeat=3))


def _gauss_mean(x, r):
    # mean of exp(-|xi|^2) over the sphere of radius r about x
    a = np.linalg.norm(x)
    r = np.abs(np.asarray(r, dtype=float))
    base = np.exp(-(a**2) - r**2)
    if a == 0:
        return base
    return base * np.where(r > 0, np.sinh(2 * a * r) / np.where(r > 0, 2 * a * r, 1.0), 1.0)


@pytest.fixture(scope="module")
def gaussian_cube():
    return solve_radial3d(GAUSS, "0", 1.0, CUBE, times=[0.0, 0.5, 1.0])


# -- spherical means -------------------------------------------------------


def test_rule_weights_sum_to_one():
    nodes, w = sphere_rule(16)
    assert w.sum() == pytest.approx(1.0, abs=1e-15)
    assert np.allclose(np.linalg.norm(nodes, axis=1), 1.0, atol=1e-15)


@pytest.mark.parametrize("r", [0.0, 0.3, 2.0, -1.5])
def test_constant_mean(r):
    assert spherical_mean("4.25", [0.1, 0.2, 0.3], r) == pytest.approx(4.25, abs=1e-14)


@pytest.mark.parametrize("x", [[0, 0, 0], [0.3, -0.2, 0.5], [2.0, 1.0, -1.0]])
def test_radius_squared_mean(x):
    r = np.array([0.0, 0.4, 1.7])
    got = spherical_mean("x^2 + y^2 + z^2", x, r)
    assert np.allclose(got, np.dot(x, x) + r**2, atol=1e-12)


@pytest.mark.parametrize("x", [[0.3, -0.2, 0.5], [-1.0, 4.0, 2.0]])
def test_linear_functions_are_mean_value(x):
    r = np.array([0.5, 3.0])
    assert np.allclose(spherical_mean("x", x, r), x[0], atol=1e-13)
    assert np.allclose(spherical_mean("2*y - z", x, r), 2 * x[1] - x[2], atol=1e-13)


# exact sphere averages of monomials a^i b^j c^k about the origin, radius 1:
# zero unless all exponents are even, else
# (i-1)!!(j-1)!!(k-1)!! / (i+j+k+1)!!
def _dfact(n):
    return 1 if n <= 0 else n * _dfact(n - 2)


def _monomial_mean(i, j, k):
    if i % 2 or j % 2 or k % 2:
        return 0.0
    return _dfact(i - 1) * _dfact(j - 1) * _dfact(k - 1) / _dfact(i + j + k + 1)


MONOMIALS = [(i, j, k) for i in range(7) for j in range(7) for k in range(7) if i + j + k <= 6]


@pytest.mark.parametrize("ijk", MONOMIALS)
def test_monomial_exactness(ijk):
    i, j, k = ijk
    h = lambda a, b, c: a**i * b**j * c**k  # noqa: E731
    assert abs(spherical_mean(h, [0, 0, 0], 1.0) - _monomial_mean(i, j, k)) <= 1e-12


def test_low_order_rule_misses_high_degree():
    h = lambda a, b, c: c**8  # noqa: E731
    assert abs(spherical_mean(h, [0, 0, 0], 1.0, quad_order=4) - 1 / 9) > 1e-6


@given(st.floats(-3, 3), st.floats(0, 4))
@settings(max_examples=40, deadline=None)
def test_mean_is_even_in_r(a, r):
    x = [a, 0.5 * a, -0.2]
    assert spherical_mean(GAUSS, x, r) == spherical_mean(GAUSS, x, -r)


@pytest.mark.parametrize("x", [[0, 0, 0], [0.5, -0.5, 1.0], [1.0, 1.0, 1.0]])
def test_gaussian_mean_closed_form(x):
    r = np.linspace(-3, 3, 61)
    assert np.allclose(spherical_mean(GAUSS, x, r), _gauss_mean(np.array(x), r), atol=1e-13)


# -- reduction -------------------------------------------------------------


def test_reduced_data_are_odd_and_match_closed_form():
    x = np.array([0.5, -0.5, 1.0])
    red = reduce(GAUSS, "0", x, 1.0)
    assert red.oddness_defect() <= 1e-8
    s = np.linspace(-6, 6, 1201) + 3.7e-4  # off the tabulation nodes
    assert np.max(np.abs(red.w0(s) - s * _gauss_mean(x, s))) <= 1e-9
    assert red.mean_f[len(red.r) // 2] == pytest.approx(math.exp(-1.5), abs=1e-15)


def test_short_radius_rejected():
    with pytest.raises(ValueError):
        reduce("1", "1", [0, 0, 0], 1.0, R_max=3.0)


def test_constant_pair_reduces_to_linear_w():
    red, sol = reduce_and_solve("2", "2", [0.1, 0.2, 0.3], 1.0)
    t, r = np.meshgrid(np.linspace(0, 1, 5), np.linspace(-2, 2, 21), indexing="ij")
    assert np.max(np.abs(sol.field(t, r) - 2 * r)) <= 1e-10


def test_unit_target_from_zero():
    red, sol = reduce_and_solve("0", "1", [0, 0, 0], 1.0)
    r = np.linspace(-4, 4, 81)
    assert np.max(np.abs(sol.field(1.0, r) - r)) <= 1e-5


def test_w_stays_odd():
    red, sol = reduce_and_solve(GAUSS, "0", [0.5, 0.0, -1.0], 1.0)
    r = np.linspace(0, 3, 31)
    for t in (0.0, 0.3, 0.7, 1.0):
        assert np.max(np.abs(sol.field(t, r) + sol.field(t, -r))) <= 1e-6


def test_reduced_problem_against_leapfrog():
    red, sol = reduce_and_solve(GAUSS, "0", [0.5, 0.0, -1.0], 1.0)
    dx = 1e-3
    grid = Grid2D(1.0, -3.0, 3.0, dx, dx)
    fld = leapfrog_solve(red.w0, sol.velocity, 1.0, grid, "padded-line")
    assert np.max(np.abs(fld.frames[-1] - red.wT(fld.x_nodes))) <= 5 * dx**2


# -- recovery --------------------------------------------------------------


def test_recover_linear():
    w = lambda t, r: 3.5 * r  # noqa: E731
    assert recover_point(w, 0.2).value == pytest.approx(3.5, abs=1e-14)


@pytest.mark.parametrize("t", [0.0, 0.4, 1.3])
def test_recover_sine(t):
    phi = lambda t: np.cos(2 * t) + t  # noqa: E731
    rec = recover_point(lambda t, r: np.sin(r) * phi(t), t)
    assert abs(rec.value - phi(t)) <= 1e-8
    assert rec.error_estimate <= 1e-8


def test_recovery_failure_reported():
    # w/r has no limit at 0
    with pytest.raises(RecoveryError):
        recover_point(lambda t, r: np.ones_like(r), 0.0)


def test_dimension_gate():
    check_dimension(3)
    for n in (2, 4, 5):
        with pytest.raises(ValueError, match="n = 3"):
            check_dimension(n)
    with pytest.raises(ValueError):
        solve_radial3d("1", "1", 1.0, [[0, 0, 0]], n=5)


# -- full pipeline ---------------------------------------------------------


def test_constant_pair_pipeline():
    res = solve_radial3d("1.75", "1.75", 1.0, [[0, 0, 0], [0.3, -0.4, 2.0]])
    for p in res.results:
        assert np.max(np.abs(p.values - 1.75)) <= 1e-8


def test_gaussian_to_zero_terminal(gaussian_cube):
    assert len(gaussian_cube.results) == 27
    assert np.max(gaussian_cube.terminal_errors) <= 1e-4
    assert np.max(gaussian_cube.initial_errors) <= 1e-5


def test_gaussian_radial_symmetry(gaussian_cube):
    # points at the same distance from the origin share their values
    by_radius = {}
    for p in gaussian_cube.results:
        key = round(float(np.dot(p.point, p.point)))
        by_radius.setdefault(key, []).append(p.values)
    for vals in by_radius.values():
        vals = np.array(vals)
        assert np.max(np.abs(vals - vals[0])) <= 1e-4


def test_jobs_do_not_change_results(monkeypatch):
    pts = CUBE[:3]
    a = solve_radial3d(GAUSS, "0", 1.0, pts, times=[0.5], jobs=1)
    monkeypatch.setenv("WAVECTL_JOBS", "3")
    b = solve_radial3d(GAUSS, "0", 1.0, pts, times=[0.5])
    assert [p.values.tolist() for p in a.results] == [p.values.tolist() for p in b.results]
