"""Dense networks with hand-written reverse mode and plain SGD.

Inputs may be a single vector ``(in,)`` or a batch ``(batch, in)``; for a
batch the parameter gradients are summed over rows, so the caller folds any
mean reduction into ``output_gradient``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import NumericError, ParseError

LEAKY_SLOPE = 0.2
ACTIVATIONS = ("identity", "relu", "leaky_relu", "tanh")
_TAGS = {name: i for i, name in enumerate(ACTIVATIONS)}
NET_MAGIC = b"NET1"


def _act(name, z):
    if name == "identity":
        return z
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "leaky_relu":
        return np.where(z > 0, z, LEAKY_SLOPE * z)
    if name == "tanh":
        return np.tanh(z)
    raise ValueError(f"unknown activation {name!r}")


def _act_grad(name, z, a):
    if name == "identity":
        return np.ones_like(z)
    if name == "relu":
        return (z > 0).astype(z.dtype)
    if name == "leaky_relu":
        return np.where(z > 0, 1.0, LEAKY_SLOPE)
    if name == "tanh":
        return 1.0 - a * a
    raise ValueError(f"unknown activation {name!r}")


@dataclass(frozen=True, eq=False)
class Layer:
    weights: np.ndarray  # (out, in)
    biases: np.ndarray  # (out,)
    activation: str

    @property
    def shape(self):
        return self.weights.shape


@dataclass(frozen=True, eq=False)
class Net:
    layers: tuple[Layer, ...]

    def __post_init__(self):
        for i, layer in enumerate(self.layers):
            if layer.activation not in _TAGS:
                raise ValueError(f"layer {i}: unknown activation {layer.activation!r}")
            if layer.biases.shape != (layer.weights.shape[0],):
                raise ValueError(f"layer {i}: bias shape {layer.biases.shape} != ({layer.weights.shape[0]},)")
            if i and self.layers[i - 1].weights.shape[0] != layer.weights.shape[1]:
                raise ValueError(f"layer {i}: input dim {layer.weights.shape[1]} does not chain")

    @property
    def in_dim(self):
        return self.layers[0].weights.shape[1]

    @property
    def out_dim(self):
        return self.layers[-1].weights.shape[0]

    def params(self):
        """Flat list of parameter arrays in (W0, b0, W1, b1, ...) order."""
        out = []
        for layer in self.layers:
            out += [layer.weights, layer.biases]
        return out

    def with_params(self, params) -> Net:
        layers = tuple(
            Layer(np.array(params[2 * i], dtype=np.float64), np.array(params[2 * i + 1], dtype=np.float64),
                  layer.activation)
            for i, layer in enumerate(self.layers)
        )
        return Net(layers)

    def same_params(self, other: Net) -> bool:
        return len(self.layers) == len(other.layers) and all(
            np.array_equal(a, b) for a, b in zip(self.params(), other.params())
        )


@dataclass(frozen=True, eq=False)
class Gradients:
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]

    def params(self):
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out


@dataclass(frozen=True, eq=False)
class Cache:
    net: Net
    inputs: tuple[np.ndarray, ...]  # input to each layer
    pre: tuple[np.ndarray, ...]  # pre-activations
    post: tuple[np.ndarray, ...]  # activations
    batched: bool


def init_net(layer_sizes, activations, seed: int) -> Net:
    """Scaled-uniform init: He for the relu family, Xavier otherwise; zero biases."""
    sizes = [int(s) for s in layer_sizes]
    if len(sizes) < 2:
        raise ValueError("need at least an input and an output size")
    if any(s < 1 for s in sizes):
        raise ValueError(f"layer sizes must be >= 1, got {sizes}")
    if len(activations) != len(sizes) - 1:
        raise ValueError(f"{len(sizes) - 1} layers but {len(activations)} activations")
    rng = np.random.default_rng(int(seed) & 0xFFFFFFFFFFFFFFFF)
    layers = []
    for fan_in, fan_out, act in zip(sizes[:-1], sizes[1:], activations):
        if act not in _TAGS:
            raise ValueError(f"unknown activation {act!r}")
        if act in ("relu", "leaky_relu"):
            bound = np.sqrt(6.0 / fan_in)
        else:
            bound = np.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-bound, bound, size=(fan_out, fan_in))
        layers.append(Layer(w, np.zeros(fan_out), act))
    return Net(tuple(layers))


def forward(net: Net, x):
    x = np.asarray(x, dtype=np.float64)
    batched = x.ndim == 2
    if x.ndim not in (1, 2) or x.shape[-1] != net.in_dim:
        raise ValueError(f"input shape {x.shape} incompatible with in-dimension {net.in_dim}")
    h = x if batched else x[None, :]
    inputs, pre, post = [], [], []
    for layer in net.layers:
        inputs.append(h)
        z = h @ layer.weights.T + layer.biases
        h = _act(layer.activation, z)
        pre.append(z)
        post.append(h)
    out = h if batched else h[0]
    return out, Cache(net, tuple(inputs), tuple(pre), tuple(post), batched)


def backward(net: Net, cache: Cache, output_gradient):
    if cache.net is not net:
        raise RuntimeError("cache was produced by a different net")
    g = np.asarray(output_gradient, dtype=np.float64)
    if not cache.batched:
        g = g[None, :]
    if g.shape != cache.post[-1].shape:
        raise ValueError(f"output gradient shape {g.shape} != output shape {cache.post[-1].shape}")
    dws, dbs = [], []
    for i in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[i]
        dz = g * _act_grad(layer.activation, cache.pre[i], cache.post[i])
        dws.append(dz.T @ cache.inputs[i])
        dbs.append(dz.sum(axis=0))
        g = dz @ layer.weights
    grads = Gradients(tuple(reversed(dws)), tuple(reversed(dbs)))
    return grads, (g if cache.batched else g[0])


def sgd_step(net: Net, grads: Gradients, learning_rate: float) -> Net:
    if len(grads.weights) != len(net.layers):
        raise ValueError("gradient/net layer count mismatch")
    layers = []
    for i, (layer, dw, db) in enumerate(zip(net.layers, grads.weights, grads.biases)):
        if dw.shape != layer.weights.shape or db.shape != layer.biases.shape:
            raise ValueError(f"layer {i}: gradient shape mismatch")
        if not (np.all(np.isfinite(dw)) and np.all(np.isfinite(db))):
            raise NumericError(f"non-finite gradient in layer {i}")
        layers.append(Layer(layer.weights - learning_rate * dw, layer.biases - learning_rate * db,
                            layer.activation))
    return Net(tuple(layers))


def net_to_bytes(net: Net) -> bytes:
    """``NET1``, u32 layer count, then per layer u32 in, u32 out, u8 activation
    tag, f64 weights (row-major, out x in) and f64 biases; little-endian."""
    parts = [NET_MAGIC, struct.pack("<I", len(net.layers))]
    for layer in net.layers:
        out_d, in_d = layer.weights.shape
        parts.append(struct.pack("<IIB", in_d, out_d, _TAGS[layer.activation]))
        parts.append(np.ascontiguousarray(layer.weights, dtype="<f8").tobytes())
        parts.append(np.ascontiguousarray(layer.biases, dtype="<f8").tobytes())
    return b"".join(parts)


def net_from_bytes(buf: bytes, offset: int = 0):
    """Decode a net starting at ``offset``; returns (net, next offset)."""
    pos = offset

    def take(n):
        nonlocal pos
        if pos + n > len(buf):
            raise ParseError(f"truncated NET1 data at byte {pos}")
        chunk = buf[pos:pos + n]
        pos += n
        return chunk

    if take(4) != NET_MAGIC:
        raise ParseError("bad magic, not a NET1 block")
    (count,) = struct.unpack("<I", take(4))
    layers = []
    for _ in range(count):
        in_d, out_d, tag = struct.unpack("<IIB", take(9))
        if tag >= len(ACTIVATIONS):
            raise ParseError(f"unknown activation tag {tag}")
        w = np.frombuffer(take(8 * in_d * out_d), dtype="<f8").reshape(out_d, in_d).astype(np.float64)
        b = np.frombuffer(take(8 * out_d), dtype="<f8").astype(np.float64)
        layers.append(Layer(w, b, ACTIVATIONS[tag]))
    return Net(tuple(layers)), pos
