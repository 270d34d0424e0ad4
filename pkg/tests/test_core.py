import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sdtlab.core import (IntegrationError, SolverKind, Trajectory, finite_diff_jacobian, integrate_ode, propagate,
                         read_trajectory_csv, sym_max_eig, write_trajectory_csv)


def decay(x):
    return -x


def test_zero_field_keeps_state():
    out = integrate_ode(lambda x: np.zeros_like(x), [1.0, 1.0], 1.0, SolverKind("rk4", 10))
    np.testing.assert_array_equal(out.final, [1.0, 1.0])


def test_euler_matches_recurrence():
    out = integrate_ode(decay, [1.0], 1.0, SolverKind("euler", 10))
    assert out.final[0] == pytest.approx(0.9**10, rel=1e-12)


@pytest.mark.parametrize("variant", ["rk4", "rk4_classic"])
def test_rk4_matches_exponential(variant):
    out = integrate_ode(decay, [1.0], 1.0, SolverKind(variant, 10))
    assert abs(out.final[0] - np.exp(-1.0)) < 1e-5


def test_convex_is_one_full_step():
    out = integrate_ode(decay, [2.0], 0.5, SolverKind("convex", 7))
    assert len(out) == 2
    assert out.final[0] == pytest.approx(2.0 - 0.5 * 2.0)


def test_rk4_fourth_order():
    errs = [abs(propagate(decay, 1.0, 2.0, SolverKind("rk4", n)) - np.exp(-2.0)) for n in (5, 10, 20, 40)]
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders > 3.7)


def test_rk4_38_tableau_against_hand_step():
    # one 3/8-rule step of x' = x^2 from x = 1 with h = 0.1, expanded by hand
    f = lambda x: x * x  # noqa: E731
    h, x = 0.1, 1.0
    k1 = f(x)
    k2 = f(x + h * k1 / 3)
    k3 = f(x + h * (-k1 / 3 + k2))
    k4 = f(x + h * (k1 - k2 + k3))
    expect = x + h / 8 * (k1 + 3 * k2 + 3 * k3 + k4)
    assert propagate(f, x, h, SolverKind("rk4", 1)) == pytest.approx(expect, rel=1e-14)


def test_non_finite_field_returns_partial():
    f = lambda x: np.array([np.inf]) if x[0] > 1.5 else np.array([1.0])  # noqa: E731
    out = integrate_ode(f, [1.0], 1.0, SolverKind("euler", 10))
    assert out.failed and out.error
    assert 1 < len(out) < 11
    with pytest.raises(IntegrationError):
        propagate(f, np.array([1.0]), 1.0, SolverKind("euler", 10))


def test_backward_propagation_inverts():
    x = propagate(decay, np.array([1.0, -2.0]), 0.7, SolverKind("rk4", 20))
    back = propagate(decay, x, -0.7, SolverKind("rk4", 20))
    np.testing.assert_allclose(back, [1.0, -2.0], atol=1e-8)


def test_solver_validation():
    with pytest.raises(ValueError):
        SolverKind("leapfrog", 3)
    with pytest.raises(ValueError):
        SolverKind("euler", 0)
    with pytest.raises(ValueError):
        integrate_ode(decay, [1.0], 0.0, SolverKind())


def test_fd_jacobian_linear():
    A = np.array([[2.0, 0.0], [0.0, 3.0]])
    np.testing.assert_allclose(finite_diff_jacobian(lambda x: A @ x, np.array([0.3, -1.0])), A, atol=1e-8)


def test_fd_jacobian_square():
    J = finite_diff_jacobian(lambda x: x**2, np.array([3.0]), h=1e-5)
    assert J[0, 0] == pytest.approx(6.0, abs=1e-6)


def test_fd_jacobian_constant_is_zero():
    np.testing.assert_array_equal(finite_diff_jacobian(lambda x: np.ones(3), np.zeros(2)), np.zeros((3, 2)))


def test_fd_jacobian_rejects_non_finite():
    with pytest.raises(FloatingPointError), np.errstate(invalid="ignore"):
        finite_diff_jacobian(np.log, np.array([1e-6]), h=1e-5)


def test_fd_jacobian_matches_closed_form_at_random_points(rng):
    def f(x):
        return np.array([np.sin(x[0]) * x[1], x[0] ** 2 + np.exp(0.3 * x[1])])

    def jac(x):
        return np.array([[np.cos(x[0]) * x[1], np.sin(x[0])], [2 * x[0], 0.3 * np.exp(0.3 * x[1])]])

    for x in rng.uniform(-2, 2, size=(20, 2)):
        np.testing.assert_allclose(finite_diff_jacobian(f, x), jac(x), atol=1e-8)


@pytest.mark.parametrize("J, expect", [
    (-np.eye(2), -1.0),
    (np.array([[0.0, -1.0], [1.0, 0.0]]), 0.0),
    (np.array([[-1.0, 2.0], [0.0, -1.0]]), 0.0),
])
def test_sym_max_eig_examples(J, expect):
    assert sym_max_eig(J) == pytest.approx(expect, abs=1e-12)


def test_sym_max_eig_rejects_non_square():
    with pytest.raises(ValueError):
        sym_max_eig(np.zeros((2, 3)))


@given(arrays(np.float64, (3, 3), elements=st.floats(-10, 10)))
def test_sym_max_eig_depends_only_on_symmetric_part(J):
    assert sym_max_eig(J) == pytest.approx(sym_max_eig(0.5 * (J + J.T)), abs=1e-9)


@given(arrays(np.float64, (3, 3), elements=st.floats(-3, 3)), st.floats(0.01, 5))
def test_sym_max_eig_bound_for_negative_definite(B, alpha):
    J = -(B.T @ B) - alpha * np.eye(3)
    assert sym_max_eig(J) <= -alpha + 1e-9


def test_trajectory_csv_round_trip(tmp_path):
    tr = Trajectory.uniform(np.array([[0.0, 1.0], [0.5, -1.25], [1.0 / 3.0, 2.0]]), 0.1)
    write_trajectory_csv(tr, tmp_path / "a.csv")
    back = read_trajectory_csv(tmp_path / "a.csv")
    np.testing.assert_array_equal(back.t, tr.t)
    np.testing.assert_array_equal(back.states, tr.states)
    assert (tmp_path / "a.csv").read_text().splitlines()[0] == "t,x1,x2"


def test_trajectory_rejects_non_increasing_time():
    with pytest.raises(ValueError):
        Trajectory(np.array([0.0, 0.0]), np.zeros((2, 1)))
