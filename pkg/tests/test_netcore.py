import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from torsynth.netcore import (ACTIVATIONS, AdamState, Layer, DenseNet, adam_step, backward,
                              forward, init_net, net_from_dict, net_to_dict)
from oracles import numeric_param_grads, relative_error


def test_init_shapes_and_glorot_bound():
    net = init_net([2, 3], ["relu"], seed=5)
    assert net.layers[0].weight.shape == (3, 2)
    assert np.all(net.layers[0].bias == 0)
    assert np.abs(net.layers[0].weight).max() <= np.sqrt(6 / 5)
    deep = init_net([4, 8, 1], ["relu", "sigmoid"], seed=0)
    assert deep.layer_sizes == [4, 8, 1]


def test_init_is_deterministic_and_validates():
    a, b = init_net([3, 4, 2], ["tanh", "identity"], 9), init_net([3, 4, 2], ["tanh", "identity"], 9)
    for p, q in zip(a.parameters(), b.parameters()):
        np.testing.assert_array_equal(p, q)
    with pytest.raises(ValueError):
        init_net([3, 0], ["relu"], 0)
    with pytest.raises(ValueError):
        init_net([3, 2], ["relu", "relu"], 0)
    with pytest.raises(ValueError):
        init_net([3, 2], ["softmax"], 0)


def test_forward_hand_cases():
    ident = DenseNet([Layer(np.eye(3), np.zeros(3), "identity")])
    x = np.arange(6.0).reshape(2, 3)
    np.testing.assert_array_equal(forward(ident, x)[0], x)
    sig = DenseNet([Layer(np.zeros((1, 1)), np.zeros(1), "sigmoid")])
    assert forward(sig, [[3.0]])[0][0, 0] == 0.5
    relu = DenseNet([Layer(np.array([[2.0]]), np.array([1.0]), "relu")])
    assert forward(relu, [[-3.0]])[0][0, 0] == 0.0
    with pytest.raises(ValueError):
        forward(relu, np.ones((2, 2)))


def test_single_linear_layer_weight_gradient_is_outer_product():
    net = init_net([3, 2], ["identity"], 1)
    x = np.array([[1.0, -2.0, 0.5]])
    g = np.array([[0.3, -1.0]])
    grads, g_in = backward(net, forward(net, x)[1], g)
    np.testing.assert_allclose(grads[0], np.outer(g[0], x[0]))
    np.testing.assert_allclose(grads[1], g[0])
    np.testing.assert_allclose(g_in, g @ net.layers[0].weight)


def test_zero_upstream_gives_zero_gradients():
    net = init_net([3, 5, 2], ["relu", "sigmoid"], 2)
    grads, _ = backward(net, forward(net, np.ones((4, 3)))[1], np.zeros((4, 2)))
    assert all(not g.any() for g in grads)


@given(st.integers(0, 10_000), st.integers(1, 3), st.data())
def test_gradients_match_central_differences(seed, depth, data):
    rng = np.random.default_rng(seed)
    sizes = [int(s) for s in rng.integers(1, 17, size=depth + 1)]
    acts = [data.draw(st.sampled_from(ACTIVATIONS)) for _ in range(depth)]
    net = init_net(sizes, acts, seed)
    # non-zero biases keep pre-activations off the relu kink, where no derivative exists
    for layer in net.layers:
        layer.bias[:] = rng.normal(scale=0.5, size=layer.bias.shape)
    x = rng.normal(size=(3, sizes[0]))
    up = rng.normal(size=(3, sizes[-1]))
    grads, _ = backward(net, forward(net, x)[1], up)
    assert relative_error(grads, numeric_param_grads(net, x, up)) < 1e-4


def test_input_gradient_matches_central_differences():
    rng = np.random.default_rng(3)
    net = init_net([4, 6, 2], ["tanh", "sigmoid"], 3)
    x = rng.normal(size=(2, 4))
    up = rng.normal(size=(2, 2))
    _, g_in = backward(net, forward(net, x)[1], up)
    num = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        xp, xm = x.copy(), x.copy()
        xp[idx] += 1e-5
        xm[idx] -= 1e-5
        num[idx] = (np.sum(forward(net, xp)[0] * up) - np.sum(forward(net, xm)[0] * up)) / 2e-5
    assert relative_error([g_in], [num]) < 1e-6


@given(st.permutations(list(range(6))))
def test_forward_is_row_permutation_equivariant(perm):
    net = init_net([3, 4, 2], ["relu", "sigmoid"], 11)
    x = np.random.default_rng(0).normal(size=(6, 3))
    np.testing.assert_array_equal(forward(net, x[perm])[0], forward(net, x)[0][perm])


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=20))
def test_activation_ranges(values):
    x = np.array([values])
    eye = np.eye(len(values))
    relu = DenseNet([Layer(eye, np.zeros(len(values)), "relu")])
    assert (relu(x) >= 0).all()
    sig = DenseNet([Layer(eye, np.zeros(len(values)), "sigmoid")])
    out = sig(x)
    assert ((out >= 0) & (out <= 1)).all()
    # strictly inside (0, 1) wherever float64 can represent it
    inner = np.abs(x) <= 30
    assert ((out[inner] > 0) & (out[inner] < 1)).all()


def test_adam_first_step_hand_value():
    net = DenseNet([Layer(np.array([[0.0]]), np.array([0.0]), "identity")])
    state = AdamState.for_net(net, learning_rate=0.1)
    adam_step(net, [np.array([[1.0]]), np.array([0.0])], state)
    # m_hat = 1, v_hat = 1 -> delta = -0.1 / (1 + 1e-8)
    assert net.layers[0].weight[0, 0] == pytest.approx(-0.1, abs=1e-8)
    assert net.layers[0].bias[0] == 0.0
    assert state.step_count == 1


def test_adam_zero_gradient_is_fixed_point_and_symmetric():
    net = init_net([2, 2], ["identity"], 4)
    before = [p.copy() for p in net.parameters()]
    state = AdamState.for_net(net)
    for _ in range(3):
        adam_step(net, [np.zeros_like(p) for p in net.parameters()], state)
    for p, q in zip(net.parameters(), before):
        np.testing.assert_array_equal(p, q)
    assert state.step_count == 3
    # equal gradients on two parameters -> equal updates
    w = net.layers[0].weight
    w0 = w.copy()
    adam_step(net, [np.full_like(w, 0.7), np.zeros(2)], state)
    delta = w - w0
    np.testing.assert_allclose(delta, delta.flat[0], rtol=1e-9)


def test_serialization_roundtrip_is_exact():
    net = init_net([5, 7, 3], ["leaky_relu", "sigmoid"], 21)
    back = net_from_dict(json.loads(json.dumps(net_to_dict(net))))
    assert back.layer_sizes == net.layer_sizes and back.activations == net.activations
    for p, q in zip(net.parameters(), back.parameters()):
        np.testing.assert_array_equal(p, q)
    with pytest.raises(ValueError):
        net_from_dict({**net_to_dict(net), "format_version": 99})
