"""Small dense network for action-value regression.

Hidden layers use the logistic sigmoid, the output layer is linear.  Inputs
may be a single vector of shape ``(n_in,)`` or a batch ``(B, n_in)``.
Training minimises half the squared error on one selected output per
sample, averaged over the batch, using gradient descent with momentum.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import expit

DEFAULT_SIZES = (4, 64, 32, 9)
CHECKPOINT_VERSION = 1

# Largest double below 1: keeps sigmoid outputs strictly inside (0, 1).
_S_MAX = np.nextafter(1.0, 0.0)
_S_MIN = np.nextafter(0.0, 1.0)


def sigmoid(z):
    return np.clip(expit(z), _S_MIN, _S_MAX)


@dataclass(eq=False)
class Layer:
    weight: np.ndarray  # (n_in, n_out)
    bias: np.ndarray    # (n_out,)
    activation: str

    def __post_init__(self):
        if self.activation not in ("sigmoid", "linear"):
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.weight.ndim != 2 or self.bias.shape != (self.weight.shape[1],):
            raise ValueError("weight/bias shapes do not match")


class QNetwork:
    """Feed-forward network with sigmoid hidden layers and a linear head.

    Parameters
    ----------
    sizes : sequence of int
        Units per layer, input first.  Defaults to ``(4, 64, 32, 9)``.
    rng : numpy.random.Generator, optional
        Source for the uniform Glorot initialisation.  Without one all
        parameters start at zero.
    """

    def __init__(self, sizes: Sequence[int] = DEFAULT_SIZES, rng: np.random.Generator | None = None):
        sizes = tuple(int(s) for s in sizes)
        if len(sizes) < 2 or any(s < 1 for s in sizes):
            raise ValueError(f"invalid layer sizes {sizes}")
        self.sizes = sizes
        self.layers: list[Layer] = []
        for i, (n_in, n_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            if rng is None:
                w = np.zeros((n_in, n_out))
            else:
                limit = np.sqrt(6.0 / (n_in + n_out))
                w = rng.uniform(-limit, limit, size=(n_in, n_out))
            act = "linear" if i == len(sizes) - 2 else "sigmoid"
            self.layers.append(Layer(w, np.zeros(n_out), act))

    @property
    def n_inputs(self) -> int:
        return self.sizes[0]

    @property
    def n_outputs(self) -> int:
        return self.sizes[-1]

    def parameters(self) -> list[np.ndarray]:
        out = []
        for layer in self.layers:
            out += [layer.weight, layer.bias]
        return out

    def copy(self) -> "QNetwork":
        net = QNetwork(self.sizes)
        clone_into(self, net)
        return net

    def __call__(self, x):
        return forward(self, x)

    def to_dict(self) -> dict:
        return {
            "format": "mirrorgroup.qnetwork",
            "version": CHECKPOINT_VERSION,
            "sizes": list(self.sizes),
            "activations": [layer.activation for layer in self.layers],
            "layers": [{"weight": layer.weight.tolist(), "bias": layer.bias.tolist()}
                       for layer in self.layers],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QNetwork":
        if d.get("format") != "mirrorgroup.qnetwork":
            raise ValueError("not a mirrorgroup network checkpoint")
        if d.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {d.get('version')!r}")
        net = cls(d["sizes"])
        if [layer.activation for layer in net.layers] != list(d["activations"]):
            raise ValueError("checkpoint activations do not match the architecture")
        for layer, saved in zip(net.layers, d["layers"]):
            w = np.array(saved["weight"], dtype=float)
            b = np.array(saved["bias"], dtype=float)
            if w.shape != layer.weight.shape or b.shape != layer.bias.shape:
                raise ValueError("checkpoint parameter shapes do not match the sizes")
            layer.weight, layer.bias = w, b
        return net

    def to_bytes(self) -> bytes:
        # repr() of a float round-trips exactly, so the JSON dump is lossless.
        return json.dumps(self.to_dict(), separators=(",", ":")).encode()


def save_checkpoint(net: QNetwork, path) -> Path:
    path = Path(path)
    path.write_bytes(net.to_bytes())
    return path


def load_checkpoint(path, sizes: Sequence[int] | None = None) -> QNetwork:
    net = QNetwork.from_dict(json.loads(Path(path).read_text()))
    if sizes is not None and tuple(sizes) != net.sizes:
        raise ValueError(f"checkpoint architecture {net.sizes} != expected {tuple(sizes)}")
    return net


def _as_batch(net: QNetwork, x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != net.n_inputs:
        raise ValueError(f"expected input with {net.n_inputs} features, got shape {x.shape}")
    return x, single


def _forward_trace(net: QNetwork, x: np.ndarray) -> list[np.ndarray]:
    acts = [x]
    a = x
    for layer in net.layers:
        z = a @ layer.weight + layer.bias
        a = sigmoid(z) if layer.activation == "sigmoid" else z
        acts.append(a)
    return acts


def forward(net: QNetwork, x) -> np.ndarray:
    """Q-values for one input vector or a batch of them."""
    xb, single = _as_batch(net, x)
    out = _forward_trace(net, xb)[-1]
    return out[0] if single else out


def backward(net: QNetwork, x, target, mask) -> tuple[list[np.ndarray], float]:
    """Gradients of the masked half squared error.

    Returns ``(grads, loss)``, with ``grads`` ordered like
    :meth:`QNetwork.parameters`.  ``mask`` is a one-hot action selector (or
    a batch of them); only selected outputs contribute.
    """
    xb, _ = _as_batch(net, x)
    t = np.atleast_2d(np.asarray(target, dtype=float))
    m = np.atleast_2d(np.asarray(mask, dtype=float))
    n_batch = xb.shape[0]
    if t.shape != (n_batch, net.n_outputs) or m.shape != t.shape:
        raise ValueError("target and mask must match the output shape")
    acts = _forward_trace(net, xb)
    err = m * (acts[-1] - t)
    loss = 0.5 * float(np.sum(err * err)) / n_batch
    delta = err / n_batch
    grads: list[np.ndarray] = []
    for i in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[i]
        a_in = acts[i]
        grads.append(delta.sum(axis=0))
        grads.append(a_in.T @ delta)
        if i > 0:
            s = acts[i]
            delta = (delta @ layer.weight.T) * s * (1.0 - s)
    grads.reverse()
    return grads, loss


@dataclass
class TrainStep:
    learning_rate: float = 1e-3
    momentum: float = 0.9
    velocity: list[np.ndarray] | None = field(default=None, repr=False)

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ValueError("learning_rate must be non-negative")
        if not 0 <= self.momentum < 1:
            raise ValueError("momentum must lie in [0, 1)")

    def reset(self, net: QNetwork) -> "TrainStep":
        self.velocity = [np.zeros_like(p) for p in net.parameters()]
        return self


def apply_update(net: QNetwork, grads: list[np.ndarray], ts: TrainStep) -> tuple[QNetwork, TrainStep]:
    """Momentum step: ``vel = momentum * vel - lr * grad``; ``param += vel``."""
    params = net.parameters()
    if ts.velocity is None:
        ts.reset(net)
    if len(grads) != len(params) or any(g.shape != p.shape for g, p in zip(grads, params)):
        raise ValueError("gradient shapes do not match the network")
    for vel, p, g in zip(ts.velocity, params, grads):
        if vel.shape != p.shape:
            raise ValueError("momentum buffer does not match the network")
        vel *= ts.momentum
        vel -= ts.learning_rate * g
        p += vel
    return net, ts


def clone_into(src: QNetwork, dst: QNetwork) -> None:
    if src.sizes != dst.sizes:
        raise ValueError(f"architecture mismatch: {src.sizes} vs {dst.sizes}")
    for ls, ld in zip(src.layers, dst.layers):
        if ls.activation != ld.activation:
            raise ValueError("activation mismatch")
        np.copyto(ld.weight, ls.weight)
        np.copyto(ld.bias, ls.bias)
