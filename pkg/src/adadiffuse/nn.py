"""Minimal dense neural network kernel.

Float64 feedforward networks built from (weight, bias, activation) layers,
with hand-derived backward passes, an Adam optimizer and a central
finite-difference gradient checker. This is all the model machinery the
denoiser and the noise-level estimator need; there is no general autodiff
graph and no convolution support.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError, StateError

ACTIVATIONS = ("identity", "relu", "sigmoid")


def _as_f64(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


def check_finite(arr: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} contains non-finite entries")


def _apply_activation(tag: str, z: np.ndarray) -> np.ndarray:
    if tag == "identity":
        return z
    if tag == "relu":
        return np.maximum(z, 0.0)
    if tag == "sigmoid":
        # split by sign for numerical stability
        out = np.empty_like(z)
        pos = z >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
        ez = np.exp(z[~pos])
        out[~pos] = ez / (1.0 + ez)
        return out
    raise ValueError(f"unknown activation {tag!r}")


def _activation_grad(tag: str, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    if tag == "identity":
        return np.ones_like(z)
    if tag == "relu":
        return (z > 0.0).astype(np.float64)
    if tag == "sigmoid":
        return a * (1.0 - a)
    raise ValueError(f"unknown activation {tag!r}")


@dataclass
class DenseLayer:
    """One affine layer: out = act(in @ weight + bias).

    weight has shape (in_dim, out_dim), bias shape (out_dim,).
    """

    weight: np.ndarray
    bias: np.ndarray
    activation: str

    def __post_init__(self):
        self.weight = _as_f64(self.weight)
        self.bias = _as_f64(self.bias)
        if self.weight.ndim != 2 or self.bias.ndim != 1:
            raise ShapeError("weight must be 2-D and bias 1-D")
        if self.weight.shape[1] != self.bias.shape[0]:
            raise ShapeError(
                f"bias length {self.bias.shape[0]} != weight out-dim {self.weight.shape[1]}"
            )
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")

    @property
    def in_dim(self) -> int:
        return self.weight.shape[0]

    @property
    def out_dim(self) -> int:
        return self.weight.shape[1]


@dataclass
class Network:
    """Feedforward stack of DenseLayers with cached-activation backward.

    Mutating operations (forward caching, parameter updates) are not
    thread-safe per instance; distinct instances are independent.
    """

    layers: list[DenseLayer]
    _cache: list | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not self.layers:
            raise ValueError("network needs at least one layer")
        for k in range(len(self.layers) - 1):
            if self.layers[k].out_dim != self.layers[k + 1].in_dim:
                raise ShapeError(
                    f"layer {k} out-dim {self.layers[k].out_dim} != "
                    f"layer {k + 1} in-dim {self.layers[k + 1].in_dim}"
                )
            if self.layers[k].activation == "sigmoid":
                raise ValueError("sigmoid is only permitted as the final activation")

    @property
    def input_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def output_dim(self) -> int:
        return self.layers[-1].out_dim

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Evaluate the network; caches activations for backward().

        Accepts a single vector (input_dim,) or a batch (n, input_dim).
        """
        x = _as_f64(x)
        single = x.ndim == 1
        if single:
            x = x[None, :]
        if x.ndim != 2 or x.shape[1] != self.input_dim:
            raise ShapeError(f"input dim {x.shape} incompatible with input_dim {self.input_dim}")
        check_finite(x, "network input")
        acts = [x]
        pre = []
        a = x
        for layer in self.layers:
            z = a @ layer.weight + layer.bias
            a = _apply_activation(layer.activation, z)
            pre.append(z)
            acts.append(a)
        check_finite(a, "network output")
        self._cache = (acts, pre, single)
        return a[0] if single else a

    def backward(self, grad_out: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
        """Exact gradients of a scalar loss w.r.t. every weight and bias.

        grad_out is dLoss/dOutput for the most recent forward() input,
        same shape as that output. Returns [(dW, db), ...] per layer.
        """
        if self._cache is None:
            raise StateError("backward() called before forward()")
        acts, pre, single = self._cache
        g = _as_f64(grad_out)
        if single:
            g = g[None, :]
        if g.shape != acts[-1].shape:
            raise ShapeError(f"upstream gradient shape {g.shape} != output shape {acts[-1].shape}")
        grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(self.layers)
        for k in range(len(self.layers) - 1, -1, -1):
            layer = self.layers[k]
            gz = g * _activation_grad(layer.activation, pre[k], acts[k + 1])
            grads[k] = (acts[k].T @ gz, gz.sum(axis=0))
            if k > 0:
                g = gz @ layer.weight.T
        return grads

    def parameters(self) -> list[np.ndarray]:
        out = []
        for layer in self.layers:
            out.append(layer.weight)
            out.append(layer.bias)
        return out

    def copy(self) -> "Network":
        return Network([
            DenseLayer(layer.weight.copy(), layer.bias.copy(), layer.activation)
            for layer in self.layers
        ])


def init_network(dims: list[int], activations: list[str], seed: int) -> Network:
    """Build a network with symmetric-uniform weights of scale 1/sqrt(fan_in)."""
    if len(activations) != len(dims) - 1:
        raise ValueError("need one activation per layer")
    rng = np.random.default_rng(seed)
    layers = []
    for k in range(len(dims) - 1):
        scale = 1.0 / np.sqrt(dims[k])
        w = rng.uniform(-scale, scale, size=(dims[k], dims[k + 1]))
        b = np.zeros(dims[k + 1])
        layers.append(DenseLayer(w, b, activations[k]))
    return Network(layers)


@dataclass
class AdamState:
    """Adam moment buffers, congruent to a Network's parameter list."""

    first_moment: list[np.ndarray]
    second_moment: list[np.ndarray]
    step_count: int = 0
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def for_network(cls, net: Network, learning_rate: float = 1e-3, **kw) -> "AdamState":
        params = net.parameters()
        return cls(
            first_moment=[np.zeros_like(p) for p in params],
            second_moment=[np.zeros_like(p) for p in params],
            learning_rate=learning_rate,
            **kw,
        )


def adam_step(net: Network, grads: list[tuple[np.ndarray, np.ndarray]], state: AdamState) -> None:
    """One bias-corrected Adam update, in place on net and state.

    Rejects non-finite gradients before touching any parameter.
    """
    flat = []
    for gw, gb in grads:
        flat.append(gw)
        flat.append(gb)
    params = net.parameters()
    if len(flat) != len(params):
        raise ShapeError("gradient list not congruent to parameters")
    for g, p in zip(flat, params):
        if g.shape != p.shape:
            raise ShapeError(f"gradient shape {g.shape} != parameter shape {p.shape}")
        if not np.all(np.isfinite(g)):
            raise ValueError("non-finite gradient entry; parameters left untouched")
    state.step_count += 1
    t = state.step_count
    bc1 = 1.0 - state.beta1**t
    bc2 = 1.0 - state.beta2**t
    for g, p, m, v in zip(flat, params, state.first_moment, state.second_moment):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= state.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + state.epsilon)


def finite_diff_check(net: Network, x: np.ndarray, loss_fn, step: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients.

    loss_fn maps the network output to a scalar and must also provide the
    analytic output gradient: loss_fn(y) -> (scalar, dLoss/dy).
    """
    for p in net.parameters():
        if not np.all(np.isfinite(p)):
            raise ValueError("network parameters contain non-finite entries")
    y = net.forward(x)
    _, gy = loss_fn(y)
    analytic = net.backward(gy)
    worst = 0.0
    for k, layer in enumerate(net.layers):
        for arr, ga in ((layer.weight, analytic[k][0]), (layer.bias, analytic[k][1])):
            it = np.nditer(arr, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                orig = arr[idx]
                arr[idx] = orig + step
                lp, _ = loss_fn(net.forward(x))
                arr[idx] = orig - step
                lm, _ = loss_fn(net.forward(x))
                arr[idx] = orig
                num = (lp - lm) / (2.0 * step)
                rel = abs(ga[idx] - num) / (abs(ga[idx]) + 1e-12)
                worst = max(worst, rel)
    net.forward(x)  # restore cache for the unperturbed input
    return worst
