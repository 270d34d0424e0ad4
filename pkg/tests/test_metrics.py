import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sdtlab import metrics as M
from sdtlab.core import Trajectory
from sdtlab.sdf import Circle


def circle_traj(r, speed=1.0, n=400, turns=1.0):
    t = np.linspace(0.0, turns * 2 * np.pi * r / speed, n)
    a = speed * t / r
    return Trajectory(t, np.stack([r * np.cos(a), r * np.sin(a)], axis=1))


def line_traj(n=100, direction=(1.0, 0.5)):
    t = np.linspace(0.0, 2.0, n)
    return Trajectory(t, t[:, None] * np.asarray(direction)[None])


def test_curvature_line_is_zero():
    np.testing.assert_allclose(M.curvature(line_traj()), 0.0, atol=1e-9)


@pytest.mark.parametrize("r", [0.5, 1.0, 3.0])
def test_curvature_circle(r):
    k = M.curvature(circle_traj(r))
    np.testing.assert_allclose(k[2:-2], 1.0 / r, rtol=0.02)


def test_curvature_parabola_vertex():
    a = 1.5
    t = np.linspace(-0.5, 0.5, 401)
    traj = Trajectory(t, np.stack([t, a * t * t], axis=1))
    k = M.curvature(traj)
    assert k[200] == pytest.approx(2 * a, rel=0.02)


def test_curvature_time_reparametrisation():
    k1 = M.curvature(circle_traj(1.5, speed=1.0))
    k2 = M.curvature(circle_traj(1.5, speed=3.0))
    np.testing.assert_allclose(k1[2:-2], k2[2:-2], rtol=0.02)


def test_curvature_3d_helix():
    t = np.linspace(0, 4 * np.pi, 2000)
    r, c = 2.0, 0.5
    traj = Trajectory(t, np.stack([r * np.cos(t), r * np.sin(t), c * t], axis=1))
    np.testing.assert_allclose(M.curvature(traj)[5:-5], r / (r * r + c * c), rtol=0.02)


def test_curvature_flags_zero_speed():
    X = np.concatenate([np.zeros((5, 2)), line_traj(10).states])
    k = M.curvature(Trajectory.uniform(X, 0.1))
    assert np.isnan(k[:4]).all()
    assert not np.isnan(k[-3:]).any()


def test_curvature_errors():
    with pytest.raises(M.MetricError):
        M.curvature(Trajectory.uniform(np.zeros((3, 2)), 0.1))
    with pytest.raises(M.MetricError):
        M.curvature(Trajectory.uniform(np.zeros((10, 4)), 0.1))
    with pytest.raises(M.MetricError):
        M.rfc(Trajectory.uniform(np.zeros((10, 2)), 0.1), line_traj())


def test_rfc_examples():
    c1, c2 = circle_traj(1.0), circle_traj(2.0)
    assert M.rfc(c1, c1) == 0.0
    assert M.rfc(c1, c2) == pytest.approx(0.5, rel=0.02)
    assert M.rfc(line_traj(), c1) == pytest.approx(1.0, rel=0.02)


def test_vm_examples():
    f = lambda X: np.stack([-X[:, 1], X[:, 0] + 1.0], axis=1)  # noqa: E731
    traj = circle_traj(1.3)
    assert M.vm(f, f, traj) == 0.0
    assert M.vm(f, lambda X: -f(X), traj) == np.pi
    perp = lambda X: np.stack([-f(X)[:, 1], f(X)[:, 0]], axis=1)  # noqa: E731
    assert M.vm(f, perp, traj) == pytest.approx(np.pi / 2, abs=1e-12)


@given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
def test_vm_scale_invariant(a, b):
    f = lambda X: np.stack([np.sin(X[:, 0]) + 2, X[:, 1]], axis=1)  # noqa: E731
    g = lambda X: np.stack([X[:, 1] + 1, np.cos(X[:, 0])], axis=1)  # noqa: E731
    traj = circle_traj(0.8, n=50)
    ref = M.vm(f, g, traj)
    assert M.vm(lambda X: a * f(X), lambda X: b * g(X), traj) == pytest.approx(ref, abs=1e-12)


def test_vm_skips_degenerate_samples():
    fc = np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]])
    fm = np.array([[0.0, 1.0], [1.0, 0.0], [0.0, 1.0]])
    angle, skipped = M.vm_samples(fc, fm)
    assert skipped == 1
    assert angle == pytest.approx(np.pi / 4)
    with pytest.raises(M.MetricError):
        M.vm_samples(np.zeros((3, 2)), fm)


def test_dtwd_examples():
    a = line_traj()
    assert M.dtwd(a, a) == 0.0
    assert M.dtwd(np.array([[0.0, 0.0]]), np.array([[3.0, 4.0]])) == pytest.approx(10.0)
    assert M.dtwd(np.array([[0.0], [1.0]]), np.array([[0.0], [2.0]])) == 2.0
    with pytest.raises(M.MetricError):
        M.dtwd(np.zeros((0, 2)), a)
    with pytest.raises(M.MetricError):
        M.dtwd(np.zeros((3, 3)), a)


def _brute_dtwd(A, B):
    s1 = sum(min(np.linalg.norm(a - b) for a in A) for b in B)
    s2 = sum(min(np.linalg.norm(a - b) for b in B) for a in A)
    return s1 + s2


point_sets = st.lists(st.tuples(st.floats(-10, 10), st.floats(-10, 10)), min_size=1, max_size=12).map(np.array)


@given(point_sets, point_sets)
def test_dtwd_properties(A, B):
    d = M.dtwd(A, B)
    assert d >= 0
    assert d == pytest.approx(M.dtwd(B, A), rel=1e-12, abs=1e-12)
    assert d == pytest.approx(_brute_dtwd(A, B), rel=1e-9, abs=1e-9)
    assert M.dtwd(A, A) == 0.0


def test_mj_examples():
    t = np.linspace(0.0, 1.0, 201)
    cubic = Trajectory(t, np.stack([t**3, np.zeros_like(t)], axis=1))
    line = Trajectory(t, np.stack([t, 2 * t], axis=1))
    assert M.mj(cubic, cubic) == 0.0
    assert M.mj(cubic, line) == pytest.approx(6.0, rel=0.05)
    assert M.mj(line, Trajectory(t, np.stack([-t, t], axis=1))) == pytest.approx(0.0, abs=1e-6)
    with pytest.raises(M.MetricError):
        M.mj(Trajectory.uniform(np.zeros((4, 2)), 0.1), line)


def test_d_min_examples():
    circ = Circle((0.0, 0.0), 1.0)
    x = np.linspace(-3, 3, 601)
    tangent = Trajectory.uniform(np.stack([x, np.full_like(x, 1.3)], axis=1), 0.01)
    assert M.d_min(tangent, circ) == pytest.approx(0.3, abs=1e-12)
    through = Trajectory.uniform(np.stack([x, np.zeros_like(x)], axis=1), 0.01)
    assert M.d_min(through, circ) < 0
    far = Trajectory.uniform(np.stack([x, np.full_like(x, 7.0)], axis=1), 0.01)
    assert M.d_min(far, circ) >= 5


def test_identical_runs_give_zero_metrics():
    f = lambda X: np.stack([-X[:, 1], X[:, 0]], axis=1)  # noqa: E731
    traj = circle_traj(1.0)
    V = f(traj.states)
    rep = M.report(traj, traj, V, V, Circle((5.0, 0.0), 1.0))
    assert rep.rfc == 0 and rep.mj == 0 and rep.vm == 0 and rep.dtwd == 0
    assert rep.to_dict()["flags"]["vm_skipped"] == 0


def test_report_invariants():
    with pytest.raises(M.MetricError):
        M.MetricReport(0.0, 4.0, 0.0, 0.0, 1.0)
    with pytest.raises(M.MetricError):
        M.MetricReport(0.0, 0.0, -1.0, 0.0, 1.0)
    with pytest.raises(M.MetricError):
        M.MetricReport(0.0, 0.0, 0.0, 0.0, np.inf)
    M.MetricReport(np.nan, np.nan, 0.0, np.nan, 1.0)
