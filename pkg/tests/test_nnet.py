import numpy as np
import pytest

from sdtlab import nnet
from sdtlab.nnet import AdamState, Mlp


def fd_grads(mlp, loss_of_out, x, h=1e-6):
    out = []
    params = mlp.params()
    for i, p in enumerate(params):
        g = np.zeros_like(p)
        for idx in np.ndindex(p.shape):
            for sgn in (1, -1):
                q = [a.copy() for a in params]
                q[i][idx] += sgn * h
                g[idx] += sgn * loss_of_out(nnet.forward(mlp.with_params(q), x))
        out.append(g / (2 * h))
    return out


def test_identity_layer_passes_input():
    mlp = Mlp([np.eye(3)], [np.zeros(3)], ["identity"])
    x = np.array([0.2, -1.0, 4.0])
    np.testing.assert_array_equal(nnet.forward(mlp, x), x)


def test_zero_weights_give_bias():
    mlp = nnet.init_mlp([2, 4, 3], seed=1)
    b = np.array([1.0, -2.0, 0.5])
    mlp = mlp.with_params([np.zeros_like(mlp.weights[0]), np.zeros(4), np.zeros_like(mlp.weights[1]), b])
    np.testing.assert_array_equal(nnet.forward(mlp, np.array([3.0, 4.0])), b)


def test_two_layer_tanh_by_hand(rng):
    W1, b1 = rng.normal(size=(2, 2)), rng.normal(size=2)
    W2, b2 = rng.normal(size=(1, 2)), rng.normal(size=1)
    mlp = Mlp([W1, W2], [b1, b2], ["tanh", "identity"])
    x = rng.normal(size=2)
    h0 = np.tanh(W1[0, 0] * x[0] + W1[0, 1] * x[1] + b1[0])
    h1 = np.tanh(W1[1, 0] * x[0] + W1[1, 1] * x[1] + b1[1])
    assert nnet.forward(mlp, x)[0] == pytest.approx(W2[0, 0] * h0 + W2[0, 1] * h1 + b2[0], rel=1e-14)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        nnet.forward(nnet.init_mlp([2, 3, 1]), np.zeros(3))


def test_zero_net_bias_gradient():
    mlp = nnet.init_mlp([2, 3, 2], seed=0)
    b = np.array([0.7, -0.4])
    mlp = mlp.with_params([np.zeros((3, 2)), np.zeros(3), np.zeros((2, 3)), b])
    _, grads = nnet.grad_params(mlp, np.array([1.0, 2.0]), lambda o: (float(o @ o), 2 * o))
    np.testing.assert_allclose(grads[-1], 2 * b)


def test_constant_loss_zero_gradient(rng):
    mlp = nnet.init_mlp([2, 5, 2], seed=3)
    _, grads = nnet.grad_params(mlp, rng.normal(size=(4, 2)), lambda o: (1.0, np.zeros_like(o)))
    assert all(np.all(g == 0) for g in grads)


@pytest.mark.parametrize("act", ["tanh", "relu"])
def test_param_gradients_match_finite_differences(rng, act):
    mlp = nnet.init_mlp([2, 4, 3, 2], hidden_act=act, seed=5)
    x = rng.normal(size=(3, 2))
    target = rng.normal(size=(3, 2))
    loss = lambda o: float(np.sum((o - target) ** 2))  # noqa: E731
    _, grads = nnet.grad_params(mlp, x, lambda o: (loss(o), 2 * (o - target)))
    for g, f in zip(grads, fd_grads(mlp, loss, x)):
        np.testing.assert_allclose(g, f, rtol=1e-4, atol=1e-7)


def test_input_jacobian_linear():
    W = np.array([[1.0, 2.0], [3.0, -4.0], [0.5, 0.0]])
    mlp = Mlp([W], [np.ones(3)], ["identity"])
    np.testing.assert_allclose(nnet.grad_input(mlp, np.array([0.3, 0.1])), W)


def test_input_jacobian_constant_net():
    mlp = nnet.init_mlp([2, 4, 1], seed=0)
    mlp = mlp.with_params([np.zeros((4, 2)), np.ones(4), mlp.weights[1], mlp.biases[1]])
    np.testing.assert_array_equal(nnet.grad_input(mlp, np.array([1.0, -1.0])), np.zeros((1, 2)))


@pytest.mark.parametrize("n_freq", [0, 2])
def test_input_jacobian_matches_finite_differences(rng, n_freq):
    mlp = nnet.init_mlp([2, 8, 8, 3], seed=2, n_freq=n_freq)
    for x in rng.normal(size=(10, 2)):
        J = nnet.grad_input(mlp, x)
        fd = np.stack([(nnet.forward(mlp, x + e) - nnet.forward(mlp, x - e)) / 2e-6 for e in 1e-6 * np.eye(2)], 1)
        np.testing.assert_allclose(J, fd, rtol=1e-4, atol=1e-7)


def test_tangent_forward_matches_reverse(rng):
    mlp = nnet.init_mlp([2, 6, 1], seed=4)
    X = rng.normal(size=(5, 2))
    vals, grads, _ = nnet.value_and_input_grad(mlp, X)
    np.testing.assert_allclose(vals, nnet.forward(mlp, X)[:, 0])
    np.testing.assert_allclose(grads, nnet.grad_input(mlp, X)[:, 0, :], rtol=1e-12)


def test_adam_zero_gradient_keeps_params():
    p = [np.array([1.0, 2.0])]
    new, st = nnet.adam_step(p, [np.zeros(2)], AdamState.zeros_like(p))
    np.testing.assert_array_equal(new[0], p[0])
    assert st.step == 1


def test_adam_first_step_by_hand():
    p, g, lr = [np.array([0.5])], [np.array([0.2])], 0.01
    new, _ = nnet.adam_step(p, g, AdamState.zeros_like(p, lr=lr))
    m = 0.1 * 0.2 / (1 - 0.9)
    v = 0.001 * 0.04 / (1 - 0.999)
    assert new[0][0] == pytest.approx(0.5 - lr * m / (np.sqrt(v) + 1e-8), rel=1e-12)


def test_adam_reduces_quadratic():
    p = [np.array([3.0])]
    st = AdamState.zeros_like(p, lr=0.1)
    losses = []
    for _ in range(3):
        losses.append(float(p[0][0] ** 2))
        p, st = nnet.adam_step(p, [2 * p[0]], st)
    assert losses[0] > losses[1] > losses[2]


def test_adam_shape_mismatch():
    p = [np.zeros(2)]
    with pytest.raises(ValueError):
        nnet.adam_step(p, [np.zeros(3)], AdamState.zeros_like(p))


def test_checkpoint_round_trip(tmp_path, rng):
    mlp = nnet.init_mlp([2, 5, 3], seed=9, n_freq=1)
    nnet.save_mlp(mlp, tmp_path / "m.json")
    back = nnet.load_mlp(tmp_path / "m.json")
    x = rng.normal(size=(4, 2))
    np.testing.assert_array_equal(nnet.forward(back, x), nnet.forward(mlp, x))
