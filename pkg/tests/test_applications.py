import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wavectl.applications import (
    PositivityError,
    WaveMapError,
    check_wavemap_conditions,
    curvature_flow_control,
    exp_neg,
    reconstruct_curve,
    solve_wavemap,
    velocity_minimum,
)
from wavectl.numerics import Grid2D, fd_residual, leapfrog_solve
from wavectl.periodic_control import InadmissibleError
from wavectl.profile import Profile

# f = 0 makes the reduced terminal exp(-g) - 1
MONOTONE = ("0", "-ln(1.5 + x^2)", 1.0)  # reduced terminal x^2 + 1/2
ALTERNATING = ("0", "-ln(3 - cos(pi*x))", 0.5)  # reduced terminal 2 - cos(pi x / (2T))


@pytest.fixture(scope="module")
def alternating():
    return solve_wavemap(*ALTERNATING)


@pytest.fixture(scope="module")
def monotone():
    return solve_wavemap(*MONOTONE)


# -- transformation --------------------------------------------------------


@pytest.mark.parametrize("text", ["sin(x)", "x^2/3 + cos(2*x)", "ln(2 + x^2)"])
def test_exp_neg_symbolic_matches_chain_rule(text):
    p = Profile.from_text(text)
    numeric = Profile(p.funcs, label="numeric")  # formula dropped
    x = np.linspace(-2, 2, 41)
    a, b = exp_neg(p), exp_neg(numeric)
    assert a.expr is not None and b.expr is None
    for k in range(4):
        assert np.allclose(a.derivative(x, k), b.derivative(x, k), rtol=1e-12, atol=1e-12)


def test_exp_neg_values():
    x = np.linspace(-1, 1, 5)
    assert np.allclose(exp_neg(Profile.from_text("x"))(x), np.exp(-x), rtol=1e-15)


# -- certificate -----------------------------------------------------------


def test_constant_gate_passes():
    cert = check_wavemap_conditions("2", "0", 1.0)
    assert cert.gate and cert.margin == pytest.approx(2.0)


def test_equal_constants_fail_gate():
    cert = check_wavemap_conditions("1", "1", 1.0)
    assert not cert.gate
    with pytest.raises(WaveMapError, match="inf f > sup g"):
        solve_wavemap("1", "1", 1.0)


def test_monotone_pattern_detected():
    cert = check_wavemap_conditions(*MONOTONE)
    assert cert.pattern == "monotone"
    assert cert.min_reduced == pytest.approx(0.5, abs=1e-12)
    assert cert.passed


def test_alternating_pattern_detected():
    cert = check_wavemap_conditions(*ALTERNATING)
    assert cert.pattern == "alternating"
    assert cert.passed
    # odd segments give non-negative sums, even ones cancel to zero
    assert abs(cert.sum_right) <= 1e-12 and abs(cert.sum_left) <= 1e-12


def test_alternating_partial_sums_by_parity():
    from wavectl.applications import _partial_sums

    T = 0.5
    d1 = lambda x: math.pi * np.sin(math.pi * x)  # noqa: E731
    even = np.linspace(2 * T * 2 - T + 1e-9, 2 * T * 2 + T - 1e-9, 50)  # segment 2
    odd = np.linspace(2 * T * 3 - T + 1e-9, 2 * T * 3 + T - 1e-9, 50)  # segment 3
    assert np.max(np.abs(_partial_sums(d1, even, T, +1))) <= 1e-12
    assert np.min(_partial_sums(d1, odd, T, +1)) >= -1e-12
    assert np.max(_partial_sums(d1, -odd, T, -1)) <= 1e-12


def test_sign_conditions_fail_for_oscillating_target():
    cert = check_wavemap_conditions("0", "-ln(1.5 - 0.4*sin(x))", 1.0)
    assert cert.gate and not cert.sums_ok
    assert cert.pattern == "none"
    with pytest.raises(WaveMapError, match="partial-sum"):
        solve_wavemap("0", "-ln(1.5 - 0.4*sin(x))", 1.0)


def test_no_nonnegative_bridge_reported():
    # reduced terminal x^2 + 0.01 on T = 1: both bridge endpoints dip below zero
    with pytest.raises(PositivityError) as info:
        solve_wavemap("0", "-ln(1.01 + x^2)", 1.0)
    assert info.value.value < 0


# -- wave-map solutions ----------------------------------------------------


@pytest.mark.parametrize("name", ["alternating", "monotone"])
def test_wavemap_examples(name, request):
    sol = request.getfixturevalue(name)
    md = sol.field.metadata
    assert md["min_z"] > 0
    assert md["wavemap_residual"] <= 1e-4
    assert md["initial_sup_error"] <= 1e-6
    assert md["terminal_sup_error"] <= 1e-5
    assert md["transform_identity"] <= 1e-12
    assert md["min_bridge"] >= 0 and md["min_velocity"] >= 0


def test_transformation_round_trip(alternating):
    t, x = np.meshgrid(np.linspace(0, 0.5, 11), np.linspace(-5, 5, 101), indexing="ij")
    z = alternating.z(t, x)
    assert np.max(np.abs(z * np.exp(alternating(t, x)) - 1)) <= 1e-12


def test_positivity_propagation(alternating):
    t, x = np.meshgrid(np.linspace(0, 0.5, 11), np.linspace(-5, 5, 201), indexing="ij")
    fh = alternating.problem.f_hat
    free = 0.5 * (fh(x - t) + fh(x + t))
    assert np.all(alternating.z(t, x) >= free - 1e-14)


def test_transformed_field_against_leapfrog(alternating):
    prob = alternating.problem
    dx = 1e-3
    grid = Grid2D(prob.T, -5.0, 5.0, dx, dx)
    fld = leapfrog_solve(prob.f_hat, alternating.velocity, prob.T, grid, "padded-line")
    err = np.max(np.abs(fld.frames[-1] - prob.g_hat(fld.x_nodes)))
    assert err <= 5 * dx**2


def test_three_point_residual_is_second_order(alternating):
    from wavectl.numerics import stencil_residual

    kinks = alternating.velocity.breakpoints(-6, 6)
    t, x = np.meshgrid(np.linspace(0.01, 0.49, 9), np.linspace(-4, 4, 81), indexing="ij")
    r = [stencil_residual(alternating.field, t, x, h, "wavemap", kinks=kinks) for h in (4e-3, 2e-3)]
    assert math.log2(r[0] / r[1]) == pytest.approx(2.0, abs=0.1)


# -- curvature flow --------------------------------------------------------


def test_constant_curvature_needs_no_control():
    r = curvature_flow_control("2", 1, "1/4", 2.0)
    assert r.M == 0.0 and r.shift == 0.0 and r.k_final == 2.0
    assert r.metadata["min_k"] == pytest.approx(2.0, abs=1e-12)


def test_curvature_example():
    r = curvature_flow_control("2 + cos(2*pi*x)", 1, "1/4", 2.0)
    md = r.metadata
    assert md["min_k"] >= -1e-12
    assert md["terminal_spread"] <= 1e-8
    assert md["min_shifted_velocity"] >= 0
    assert md["shift_identity"] <= 1e-12


def test_curvature_shift_against_closed_form():
    # k = cos(w t) cos(2 pi s) + b sin(w t)/w cos(2 pi s) + 2 with w = 2 pi and
    # cos(w T) + b sin(w T)/w = 0 at T = 1/3, so v = (2 pi / sqrt 3) cos(2 pi s)
    b = 2 * math.pi / math.sqrt(3)
    r = curvature_flow_control("2 + cos(2*pi*x)", 1, "1/3", 2.0)
    assert r.M == pytest.approx(-b, abs=1e-10)
    assert r.argmin == pytest.approx(0.5, abs=1e-6)
    assert r.k_final == pytest.approx(2 + b / 3, abs=1e-10)
    md = r.metadata
    assert md["min_k"] >= -1e-12 and md["terminal_spread"] <= 1e-8
    s = np.linspace(0, 1, 4001)
    assert np.all(r.shifted_velocity(s) >= 0)


def test_shifted_field_solves_linear_equation():
    r = curvature_flow_control("2 + cos(2*pi*x)", 1, "1/3", 2.0)
    res = [fd_residual(r.field, Grid2D(1 / 3, 0.0, 1.0, h, h)) for h in (0.02, 0.01)]
    assert res[1] <= 1e-2
    assert math.log2(res[0] / res[1]) == pytest.approx(2.0, abs=0.2)
    s = np.linspace(0, 1, 101)
    assert np.max(np.abs(r(0.0, s) - (2 + np.cos(2 * np.pi * s)))) <= 1e-12


def test_negative_curvature_rejected():
    with pytest.raises(ValueError, match="negative"):
        curvature_flow_control("cos(2*pi*x)", 1, "1/4", 1.0)


def test_integer_ratio_rejected():
    with pytest.raises(InadmissibleError):
        curvature_flow_control("2 + cos(2*pi*x)", 1, "1/2", 1.0)


def test_nonpositive_target_rejected():
    with pytest.raises(ValueError):
        curvature_flow_control("2", 1, "1/4", 0.0)


@given(st.floats(0.0, 1.0), st.floats(0.5, 3.0))
@settings(max_examples=30, deadline=None)
def test_velocity_minimum_of_shifted_cosine(phase, amp):
    v = lambda s: amp * np.cos(2 * np.pi * (np.asarray(s) - phase))  # noqa: E731
    M, where = velocity_minimum(v, 1.0)
    assert M == pytest.approx(-amp, abs=1e-12)
    assert abs(((where - phase - 0.5) + 0.5) % 1.0 - 0.5) <= 1e-5


# -- curve reconstruction --------------------------------------------------


def test_circle_closes():
    c = reconstruct_curve("2*pi", 1.0)
    assert c.theta_defect <= 1e-9 and c.position_defect <= 1e-9
    centre = np.array([0.0, 1 / (2 * math.pi)])
    assert np.allclose(np.hypot(*(c.points - centre).T), 1 / (2 * math.pi), atol=1e-9)


def test_perturbed_circle_turns_once():
    c = reconstruct_curve("2*pi + 0.1*sin(2*pi*x)", 1.0)
    assert c.theta_defect <= 1e-12
    assert c.position_defect > 0


def test_zero_curvature_is_a_segment():
    c = reconstruct_curve("0", 1.0)
    assert c.theta_defect == pytest.approx(2 * math.pi)
    assert c.position_defect == pytest.approx(1.0)
    assert np.allclose(c.points[:, 1], 0.0)
