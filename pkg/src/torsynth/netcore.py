"""A small fully-connected network engine: forward, backward, Adam.

Just enough machinery for the VAE and GAN generators. Everything is float64
and driven by explicit seeds; gradients are exact and are checked against
central finite differences in the test-suite.
"""
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from ._random import make_rng

FORMAT_VERSION = 1
ACTIVATIONS = ("relu", "leaky_relu", "sigmoid", "tanh", "identity")
LEAKY_SLOPE = 0.2


@dataclass
class Layer:
    weight: np.ndarray  # (out, in)
    bias: np.ndarray  # (out,)
    activation: str

    @property
    def n_in(self):
        return self.weight.shape[1]

    @property
    def n_out(self):
        return self.weight.shape[0]


@dataclass
class DenseNet:
    layers: list
    seed: int = 0

    @property
    def layer_sizes(self):
        return [self.layers[0].n_in] + [layer.n_out for layer in self.layers]

    @property
    def activations(self):
        return [layer.activation for layer in self.layers]

    def parameters(self):
        """Flat list ``[W0, b0, W1, b1, ...]``; the arrays are the live parameters."""
        out = []
        for layer in self.layers:
            out.extend((layer.weight, layer.bias))
        return out

    @property
    def n_params(self):
        return sum(p.size for p in self.parameters())

    @property
    def nbytes(self):
        return sum(p.nbytes for p in self.parameters())

    def copy(self):
        return DenseNet([Layer(l.weight.copy(), l.bias.copy(), l.activation)
                         for l in self.layers], self.seed)

    def __call__(self, x):
        return forward(self, x)[0]


def init_net(layer_sizes, activations, seed):
    """Glorot-uniform weights, zero biases: W ~ U(-s, s) with s = sqrt(6 / (fan_in + fan_out))."""
    layer_sizes = [int(n) for n in layer_sizes]
    if len(layer_sizes) < 2:
        raise ValueError("need at least an input and an output size")
    if any(n <= 0 for n in layer_sizes):
        raise ValueError(f"layer sizes must be positive, got {layer_sizes}")
    activations = list(activations)
    if len(activations) != len(layer_sizes) - 1:
        raise ValueError("one activation per layer required")
    for act in activations:
        if act not in ACTIVATIONS:
            raise ValueError(f"unknown activation {act!r}")
    rng = make_rng(seed)
    layers = []
    for n_in, n_out, act in zip(layer_sizes[:-1], layer_sizes[1:], activations):
        s = np.sqrt(6.0 / (n_in + n_out))
        layers.append(Layer(rng.uniform(-s, s, size=(n_out, n_in)), np.zeros(n_out), act))
    return DenseNet(layers, int(seed))


def _activate(name, z):
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "leaky_relu":
        return np.where(z > 0, z, LEAKY_SLOPE * z)
    if name == "sigmoid":
        return expit(z)
    if name == "tanh":
        return np.tanh(z)
    return z


def _activation_grad(name, z, a, upstream):
    if name == "relu":
        return upstream * (z > 0)
    if name == "leaky_relu":
        return upstream * np.where(z > 0, 1.0, LEAKY_SLOPE)
    if name == "sigmoid":
        return upstream * a * (1.0 - a)
    if name == "tanh":
        return upstream * (1.0 - a * a)
    return upstream


def forward(net, batch):
    """Run ``batch`` (rows = samples) through ``net``.

    Returns ``(output, tape)`` where the tape holds each layer's input,
    pre-activation and output, which is what :func:`backward` needs.
    """
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != net.layers[0].n_in:
        raise ValueError(f"expected a (n, {net.layers[0].n_in}) batch, got shape {x.shape}")
    tape = []
    for layer in net.layers:
        z = x @ layer.weight.T + layer.bias
        a = _activate(layer.activation, z)
        tape.append((x, z, a))
        x = a
    return x, tape


def backward(net, tape, output_gradient):
    """Back-propagate dLoss/dOutput through the taped forward pass.

    Returns ``(grads, input_gradient)``: ``grads`` is laid out like
    ``net.parameters()``, ``input_gradient`` is dLoss/dInput (needed when
    one network feeds another, e.g. generator into discriminator).
    """
    if len(tape) != len(net.layers):
        raise ValueError("tape does not belong to this network")
    g = np.asarray(output_gradient, dtype=np.float64)
    if g.shape != tape[-1][2].shape:
        raise ValueError(f"output gradient shape {g.shape} != output shape {tape[-1][2].shape}")
    grads = [None] * (2 * len(net.layers))
    for k in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[k]
        x, z, a = tape[k]
        dz = _activation_grad(layer.activation, z, a, g)
        grads[2 * k] = dz.T @ x
        grads[2 * k + 1] = dz.sum(axis=0)
        g = dz @ layer.weight
    return grads, g


@dataclass
class AdamState:
    first_moment: list
    second_moment: list
    step_count: int = 0
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def for_net(cls, net, learning_rate=1e-3, beta1=0.9, beta2=0.999, epsilon=1e-8):
        params = net.parameters()
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params],
                   0, learning_rate, beta1, beta2, epsilon)

    @property
    def nbytes(self):
        return sum(m.nbytes for m in self.first_moment) + sum(v.nbytes for v in self.second_moment)


def adam_step(net, grads, state):
    """Bias-corrected Adam update, applied in place; returns ``(net, state)``."""
    params = net.parameters()
    if len(grads) != len(params):
        raise ValueError("gradient list does not match the network parameters")
    state.step_count += 1
    t = state.step_count
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** t
    c2 = 1.0 - b2 ** t
    for p, g, m, v in zip(params, grads, state.first_moment, state.second_moment):
        if g.shape != p.shape:
            raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape}")
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p -= state.learning_rate * (m / c1) / (np.sqrt(v / c2) + state.epsilon)
    return net, state


def net_to_dict(net):
    return {
        "format_version": FORMAT_VERSION,
        "layer_sizes": net.layer_sizes,
        "activations": net.activations,
        "weights": [l.weight.ravel().tolist() for l in net.layers],
        "biases": [l.bias.tolist() for l in net.layers],
        "seed": net.seed,
    }


def net_from_dict(data):
    if data.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported network format version {data.get('format_version')!r}")
    sizes = data["layer_sizes"]
    layers = []
    for k, act in enumerate(data["activations"]):
        w = np.array(data["weights"][k], dtype=np.float64).reshape(sizes[k + 1], sizes[k])
        b = np.array(data["biases"][k], dtype=np.float64)
        layers.append(Layer(w, b, act))
    return DenseNet(layers, int(data["seed"]))
