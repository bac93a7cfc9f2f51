"""Feed-forward network with hand-written reverse mode.

Parameters are plain numpy arrays; weights[k] has shape (in, out) and
biases[k] shape (out,). `forward` caches what `backward` needs, and
`per_example_backward` keeps the batch axis for DP-SGD clipping.
"""

import logging, math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from src.errors import InputError

logger = logging.getLogger(__name__)

LEAKY_SLOPE = 0.2


class Activation(Enum):
    RELU = "relu"
    LEAKY_RELU = "leaky_relu"
    TANH = "tanh"
    IDENTITY = "identity"


def _activate(kind: Activation, z: np.ndarray) -> np.ndarray:
    if kind == Activation.RELU:
        return np.maximum(z, 0.0)
    if kind == Activation.LEAKY_RELU:
        return np.where(z > 0, z, LEAKY_SLOPE * z)
    if kind == Activation.TANH:
        return np.tanh(z)
    return z


def _activation_grad(kind: Activation, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    if kind == Activation.RELU:
        return (z > 0).astype(float)
    if kind == Activation.LEAKY_RELU:
        return np.where(z > 0, 1.0, LEAKY_SLOPE)
    if kind == Activation.TANH:
        return 1.0 - a ** 2
    return np.ones_like(z)


@dataclass
class ForwardCache:
    inputs: list[np.ndarray]        # input to each layer
    pre_activations: list[np.ndarray]
    outputs: list[np.ndarray]       # post-activation of each layer


@dataclass
class NetGradients:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    input_grad: np.ndarray | None = None

    def scaled(self, factor: float) -> "NetGradients":
        return NetGradients([w * factor for w in self.weights], [b * factor for b in self.biases],
                            None if self.input_grad is None else self.input_grad * factor)


@dataclass
class DenseNet:
    sizes: tuple[int, ...]
    activations: tuple[Activation, ...]
    weights: list[np.ndarray] = field(default_factory=list)
    biases: list[np.ndarray] = field(default_factory=list)
    cache: ForwardCache | None = field(default=None, repr=False)

    def __post_init__(self):
        self.sizes = tuple(int(s) for s in self.sizes)
        self.activations = tuple(Activation(a) for a in self.activations)
        if len(self.sizes) < 2 or any(s < 1 for s in self.sizes):
            raise InputError(f"invalid layer sizes {self.sizes}")
        if len(self.activations) != len(self.sizes) - 1:
            raise InputError(f"{len(self.sizes) - 1} layers need as many activations, got {len(self.activations)}")
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (self.sizes[k], self.sizes[k + 1]) or b.shape != (self.sizes[k + 1],):
                raise InputError(f"layer {k}: parameter shapes {w.shape}, {b.shape} do not match sizes {self.sizes}")

    @classmethod
    def create(cls, sizes: Sequence[int], activations: Sequence[Activation | str],
               rng: np.random.Generator, gains: Sequence[float] | None = None) -> "DenseNet":
        """Uniform init in +-gain/sqrt(fan_in) (gain 1 unless given per layer), zero biases.

        A gain of sqrt(6) is He-uniform init for relu layers.
        """
        if gains is None:
            gains = [1.0] * (len(sizes) - 1)
        if len(gains) != len(sizes) - 1:
            raise InputError(f"{len(sizes) - 1} layers need as many gains, got {len(gains)}")
        weights, biases = [], []
        for fan_in, fan_out, gain in zip(sizes[:-1], sizes[1:], gains):
            limit = gain / math.sqrt(fan_in)
            weights.append(rng.uniform(-limit, limit, (fan_in, fan_out)))
            biases.append(np.zeros(fan_out))
        return cls(tuple(sizes), tuple(activations), weights, biases)

    @property
    def layer_count(self) -> int:
        return len(self.weights)

    def parameters(self) -> list[np.ndarray]:
        return [p for pair in zip(self.weights, self.biases) for p in pair]

    def copy(self) -> "DenseNet":
        return DenseNet(self.sizes, self.activations, [w.copy() for w in self.weights],
                        [b.copy() for b in self.biases])

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim != 2 or x.shape[1] != self.sizes[0]:
            raise InputError(f"input of shape {x.shape} does not match input width {self.sizes[0]}")
        cache = ForwardCache([], [], [])
        a = x
        for w, b, kind in zip(self.weights, self.biases, self.activations):
            cache.inputs.append(a)
            z = a @ w + b
            a = _activate(kind, z)
            cache.pre_activations.append(z)
            cache.outputs.append(a)
        self.cache = cache
        return a

    def predict(self, x: np.ndarray) -> np.ndarray:
        """Forward pass that leaves the cache untouched."""
        a = np.asarray(x, dtype=float)
        for w, b, kind in zip(self.weights, self.biases, self.activations):
            a = _activate(kind, a @ w + b)
        return a

    def _deltas(self, grad_out: np.ndarray):
        if self.cache is None:
            raise RuntimeError("backward called without a cached forward pass")
        cache = self.cache
        grad_out = np.asarray(grad_out, dtype=float)
        if grad_out.shape != cache.outputs[-1].shape:
            raise InputError(f"upstream gradient shape {grad_out.shape} != output shape {cache.outputs[-1].shape}")
        g = grad_out
        for k in reversed(range(self.layer_count)):
            delta = g * _activation_grad(self.activations[k], cache.pre_activations[k], cache.outputs[k])
            yield k, delta
            g = delta @ self.weights[k].T
        self._input_grad = g

    def backward(self, grad_out: np.ndarray) -> NetGradients:
        """Batch-summed parameter gradients for an upstream gradient on the output."""
        dw = [np.empty(0)] * self.layer_count
        db = [np.empty(0)] * self.layer_count
        for k, delta in self._deltas(grad_out):
            dw[k] = self.cache.inputs[k].T @ delta
            db[k] = delta.sum(axis=0)
        return NetGradients(dw, db, self._input_grad)

    def per_example_backward(self, grad_out: np.ndarray) -> NetGradients:
        """Gradients kept per example: weights (B, in, out), biases (B, out)."""
        dw = [np.empty(0)] * self.layer_count
        db = [np.empty(0)] * self.layer_count
        for k, delta in self._deltas(grad_out):
            dw[k] = np.einsum("bi,bo->bio", self.cache.inputs[k], delta)
            db[k] = delta
        return NetGradients(dw, db, self._input_grad)

    def apply_gradients(self, grads: NetGradients, learning_rate: float) -> None:
        """Plain SGD step."""
        for k in range(self.layer_count):
            self.weights[k] -= learning_rate * grads.weights[k]
            self.biases[k] -= learning_rate * grads.biases[k]

    def clip_weights(self, bound: float) -> None:
        for k in range(self.layer_count):
            np.clip(self.weights[k], -bound, bound, out=self.weights[k])
            np.clip(self.biases[k], -bound, bound, out=self.biases[k])


def _flat(grads: NetGradients) -> list[np.ndarray]:
    """Gradients in `DenseNet.parameters()` order."""
    return [g for pair in zip(grads.weights, grads.biases) for g in pair]


class Sgd:
    """Plain gradient descent bound to one network."""

    def __init__(self, net: DenseNet, learning_rate: float):
        if learning_rate <= 0:
            raise InputError(f"learning rate must be positive, got {learning_rate}")
        self.net = net
        self.learning_rate = learning_rate

    def step(self, grads: NetGradients) -> None:
        self.net.apply_gradients(grads, self.learning_rate)


class Adam:
    """Adam with bias-corrected moments, one state array per network parameter.

    beta1=0 gives an RMSProp-style step.
    """

    def __init__(self, net: DenseNet, learning_rate: float, beta1: float = 0.5, beta2: float = 0.999,
                 eps: float = 1e-8):
        if learning_rate <= 0:
            raise InputError(f"learning rate must be positive, got {learning_rate}")
        if not (0 <= beta1 < 1 and 0 <= beta2 < 1):
            raise InputError(f"Adam betas must lie in [0, 1), got ({beta1}, {beta2})")
        self.net = net
        self.learning_rate = learning_rate
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self._m = [np.zeros_like(p) for p in net.parameters()]
        self._v = [np.zeros_like(p) for p in net.parameters()]

    def step(self, grads: NetGradients) -> None:
        self.t += 1
        first = 1.0 - self.beta1 ** self.t
        second = 1.0 - self.beta2 ** self.t
        for param, grad, m, v in zip(self.net.parameters(), _flat(grads), self._m, self._v):
            m *= self.beta1
            m += (1.0 - self.beta1) * grad
            v *= self.beta2
            v += (1.0 - self.beta2) * grad ** 2
            param -= self.learning_rate * (m / first) / (np.sqrt(v / second) + self.eps)


def net_forward(net: DenseNet, batch: np.ndarray) -> np.ndarray:
    return net.forward(batch)


def net_backward(net: DenseNet, grad_out: np.ndarray) -> NetGradients:
    return net.backward(grad_out)


def per_example_norms(grads: NetGradients) -> np.ndarray:
    squares = sum(np.sum(w.reshape(w.shape[0], -1) ** 2, axis=1) for w in grads.weights)
    squares = squares + sum(np.sum(b.reshape(b.shape[0], -1) ** 2, axis=1) for b in grads.biases)
    return np.sqrt(squares)


def per_example_clip(grads: NetGradients, clip_norm: float) -> NetGradients:
    """Scale each example's full gradient by min(1, C / ||g||_2)."""
    if clip_norm <= 0:
        raise InputError(f"clip norm must be positive, got {clip_norm}")
    norms = per_example_norms(grads)
    factors = np.minimum(1.0, clip_norm / np.maximum(norms, 1e-12))
    return NetGradients([w * factors[:, None, None] for w in grads.weights],
                        [b * factors[:, None] for b in grads.biases],
                        grads.input_grad)
