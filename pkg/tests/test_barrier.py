import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sdtlab.barrier import BarrierConfig, b_inv, b_swept, barrier_value, generator
from sdtlab.sdf import Circle, HalfPlane

vec = st.lists(st.floats(-10, 10), min_size=2, max_size=2).map(np.array)


def test_b_inv_examples():
    assert b_inv(2.0, BarrierConfig(s_grad=1.0, t_save=0.0)) == pytest.approx(0.5)
    assert b_inv(0.6, BarrierConfig(s_grad=0.1, t_save=0.1)) == pytest.approx(0.2)
    cfg = BarrierConfig(s_grad=0.1, t_save=0.1, b_cap=1e3)
    assert b_inv(0.1 + 1e-9, cfg) == 1e3
    assert b_inv(0.1, cfg) == 1e3
    assert b_inv(-5.0, cfg) == 1e3


def test_b_inv_batched():
    out = b_inv(np.array([2.0, 3.0]), BarrierConfig(1.0, 0.0))
    np.testing.assert_allclose(out, [0.5, 1 / 3])


@given(st.floats(0.1, 100), st.floats(0.1, 100), st.floats(0.01, 2.0), st.floats(0.0, 1.0))
def test_b_inv_non_increasing(g1, g2, s, t):
    cfg = BarrierConfig(s_grad=s, t_save=t)
    lo, hi = sorted((t + g1, t + g2))
    assert b_inv(hi, cfg) <= b_inv(lo, cfg)
    assert 0 <= b_inv(lo, cfg) <= cfg.b_cap


def test_b_inv_vanishes_far_away():
    cfg = BarrierConfig()
    vals = [b_inv(g, cfg) for g in (1e2, 1e4, 1e6)]
    assert vals[0] > vals[1] > vals[2]
    assert vals[2] < 1e-6


def test_b_swept_examples():
    g = np.array([1.0, 0.0])
    assert b_swept(g, g, "robot") == pytest.approx(1.0)
    assert b_swept(-g, g, "robot") == pytest.approx(0.0)
    assert b_swept(np.array([0.0, 2.0]), g, "scene") == pytest.approx(0.5)
    assert b_swept(np.zeros(2), g, "scene") == 1.0
    assert b_swept(g, np.zeros(2), "robot") == 1.0
    with pytest.raises(ValueError):
        b_swept(g, g, "none")


@given(vec, vec)
def test_b_swept_bounds_and_complement(v, g):
    r, s = b_swept(v, g, "robot"), b_swept(v, g, "scene")
    assert 0.0 <= r <= 1.0 and 0.0 <= s <= 1.0
    if np.linalg.norm(v) > 0 and np.linalg.norm(g) > 0:
        assert r + s == pytest.approx(1.0, abs=1e-12)


def test_config_validation():
    for kw in ({"s_grad": 0.0}, {"t_save": -0.1}, {"b_cap": 0.0}, {"swept": "both"}):
        with pytest.raises(ValueError):
            BarrierConfig(**kw)
    cfg = BarrierConfig(0.2, 0.05, "scene", False, 50.0)
    assert BarrierConfig.from_dict(cfg.to_dict()) == cfg


def test_generator_unit_barrier():
    cfg = BarrierConfig(s_grad=1.0, t_save=0.0)
    V = generator(HalfPlane((1.0, 0.0)), cfg, np.array([1.0, 0.0]))
    np.testing.assert_allclose(V, [-1.0, 0.0])


def test_generator_far_field_bound():
    cfg = BarrierConfig()
    circ = Circle((0.0, 0.0), 1.0)
    for r in (10.0, 100.0, 1000.0):
        q = np.array([r, 0.0])
        gamma = r - 1.0
        assert np.linalg.norm(generator(circ, cfg, q)) <= cfg.s_grad / (gamma - cfg.t_save) + 1e-15
    assert np.linalg.norm(generator(circ, cfg, np.array([1e6, 0.0]))) < 1e-6


def test_generator_scene_mode_moving_away():
    cfg = BarrierConfig(swept="scene")
    q = np.array([3.0, 0.0])
    V = generator(Circle(), cfg, q, v_base=np.array([2.0, 0.0]))
    np.testing.assert_array_equal(V, [0.0, 0.0])


def test_combine_flag():
    cfg = BarrierConfig(s_grad=1.0, t_save=0.0, swept="robot", combine=False)
    g = np.array([1.0, 0.0])
    assert barrier_value(5.0, g, cfg, v_base=np.array([0.0, 1.0])) == pytest.approx(0.5)
    both = BarrierConfig(s_grad=1.0, t_save=0.0, swept="robot", combine=True)
    assert barrier_value(5.0, g, both, v_base=np.array([0.0, 1.0])) == pytest.approx(0.1)
    assert barrier_value(5.0, g, both, v_base=None) == pytest.approx(0.2)


@given(st.lists(st.floats(-4, 4), min_size=2, max_size=2), st.floats(0.01, 1.0))
def test_generator_antiparallel_to_gradient(q, s):
    q = np.array(q)
    circ = Circle((0.5, -0.5), 0.7)
    if np.linalg.norm(q - circ.center) < 1e-6:
        return
    V = generator(circ, BarrierConfig(s_grad=s), q)
    g = circ.gradient(q)
    assert np.linalg.norm(V) > 0
    cos = V @ g / (np.linalg.norm(V) * np.linalg.norm(g))
    assert cos == pytest.approx(-1.0, abs=1e-12)


def test_generator_batched_and_saturation_info():
    Q = np.array([[5.0, 0.0], [1.05, 0.0], [0.0, 0.0]])
    V, gamma, sat = generator(Circle(), BarrierConfig(), Q, with_info=True)
    assert V.shape == (3, 2)
    np.testing.assert_allclose(gamma, [4.0, 0.05, -1.0])
    assert sat.tolist() == [False, True, True]
