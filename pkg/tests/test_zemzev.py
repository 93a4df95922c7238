import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from windguide.core import BoundaryConditions, LinearWind, NonPositiveTgo
from windguide.guidance import control_at, propagate, solve_intercept, solve_rendezvous
from windguide.zemzev import (
    ZemZevErrors,
    compute_errors,
    feedback_command,
    feedback_costates,
    intercept_command,
    rendezvous_command,
)

ORIGIN = np.zeros(3)
small = st.floats(-5, 5, allow_nan=False)
vec = st.tuples(small, small, small)


def test_definitions_without_wind():
    bc = BoundaryConditions((10, 2, 0), (1, 1, 1), (-1, 0, 0), (0, 1, 0))
    e = compute_errors(bc.r0, bc.vg0, bc, ORIGIN, 4.0)
    np.testing.assert_allclose(e.zem, bc.rf - bc.r0 - bc.vg0 * 4.0)
    np.testing.assert_allclose(e.zev, bc.vgf - bc.vg0)


def test_collision_course_gives_zero_miss_and_command():
    k = np.array([0.5, -0.2, 0.0])
    r, vg, t_go = np.array([1.0, 2.0, 0.0]), np.array([0.3, -1.0, 0.0]), 3.0
    rf = r + vg * t_go + 0.5 * k * t_go**2
    bc = BoundaryConditions.intercept((9, 9, 9), rf, (0, 0, 0))
    e = compute_errors(r, vg, bc, k, t_go)
    np.testing.assert_allclose(e.zem, 0.0, atol=1e-14)
    np.testing.assert_array_equal(e.zev, 0.0)
    np.testing.assert_allclose(intercept_command(e), 0.0, atol=1e-14)


def test_command_formulas():
    e = ZemZevErrors((1, 0, 0), (0, 2, 0), 1.0)
    np.testing.assert_allclose(intercept_command(e), [3, 0, 0])
    np.testing.assert_allclose(rendezvous_command(e), [6, -4, 0])
    np.testing.assert_array_equal(rendezvous_command(ZemZevErrors(ORIGIN, ORIGIN, 2.0)), 0.0)


@given(vec, vec, st.floats(0.1, 10))
def test_scaling_with_time_to_go(zem, zev, t_go):
    one = rendezvous_command(ZemZevErrors(zem, ORIGIN, t_go))
    two = rendezvous_command(ZemZevErrors(zem, ORIGIN, 2 * t_go))
    np.testing.assert_allclose(two, one / 4, atol=1e-12)
    one = rendezvous_command(ZemZevErrors(ORIGIN, zev, t_go))
    two = rendezvous_command(ZemZevErrors(ORIGIN, zev, 2 * t_go))
    np.testing.assert_allclose(two, one / 2, atol=1e-12)


def test_non_positive_time_to_go():
    with pytest.raises(NonPositiveTgo):
        ZemZevErrors(ORIGIN, ORIGIN, 0.0)
    bc = BoundaryConditions.intercept((1, 0, 0), ORIGIN, ORIGIN)
    with pytest.raises(NonPositiveTgo):
        compute_errors(ORIGIN, ORIGIN, bc, ORIGIN, -1.0)


@given(vec, vec, vec, vec, st.floats(0.01, 50))
def test_feedback_matches_open_loop(r0, vg0, vgf, k, ci):
    r0 = np.array(r0) * 8
    wind = LinearWind((1, -1, 0), k)
    for bc, solve in (
        (BoundaryConditions(r0, ORIGIN, vg0, vgf), solve_rendezvous),
        (BoundaryConditions.intercept(r0, ORIGIN, vg0), solve_intercept),
    ):
        sol = solve(bc, wind, ci)
        if sol.at_target:
            continue
        for t in np.linspace(0, sol.tf, 7)[:-1]:
            r, vg = propagate(sol, t)
            u = control_at(sol, t)
            np.testing.assert_allclose(
                feedback_command(r, vg, bc, wind.k, sol.tf - t), u, atol=1e-8 * (1 + np.abs(sol.costates.p_v0).sum())
            )
            p_r, p_v = feedback_costates(r, vg, bc, wind.k, sol.tf - t)
            np.testing.assert_allclose(p_v, sol.costates.p_v(t), atol=1e-8 * (1 + np.abs(sol.costates.p_v0).sum()))
            np.testing.assert_allclose(p_r, sol.costates.p_r, atol=1e-7 * (1 + np.abs(sol.costates.p_r).sum() * sol.tf))
