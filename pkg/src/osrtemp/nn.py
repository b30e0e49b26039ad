"""A small dense network with hand-written backprop and an SGD optimizer.

All parameters live in one flat float64 buffer (``net.params``); each layer's
weight and bias are reshaped views into it, and the same goes for
``net.grads``. The encoder is a chain of affine layers, each followed by a
ReLU, producing the representation ``z``. The head is either a linear
classifier (logits) or a linear projection whose rows are L2-normalized.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ContractError, NumericError, ShapeError

CLASSIFIER = "classifier"
PROJECTION = "projection"
_HEADS = (CLASSIFIER, PROJECTION)
_NORM_EPS = 1e-12
CHECKPOINT_VERSION = 1


class Network:
    """Encoder ``in_dim -> hidden... -> rep_dim`` plus a classifier or projection head.

    ``encoder_dims`` lists the output width of each encoder layer; an empty
    list means the representation is the raw input.
    """

    def __init__(self, in_dim, encoder_dims, head, head_dim, seed=0, params=None):
        if head not in _HEADS:
            raise ValueError(f"head must be one of {_HEADS}, got {head!r}")
        self.in_dim = int(in_dim)
        self.encoder_dims = [int(d) for d in encoder_dims]
        self.head = head
        self.head_dim = int(head_dim)

        dims = [self.in_dim, *self.encoder_dims, self.head_dim]
        self.shapes = [(a, b) for a, b in zip(dims[:-1], dims[1:])]
        size = sum(a * b + b for a, b in self.shapes)
        self.params = np.zeros(size)
        self.grads = np.zeros(size)
        self.decay_mask = np.zeros(size, dtype=bool)
        self.weights, self.biases = [], []
        self.weight_grads, self.bias_grads = [], []
        offset = 0
        for a, b in self.shapes:
            self.weights.append(self.params[offset:offset + a * b].reshape(a, b))
            self.weight_grads.append(self.grads[offset:offset + a * b].reshape(a, b))
            self.decay_mask[offset:offset + a * b] = True
            offset += a * b
            self.biases.append(self.params[offset:offset + b])
            self.bias_grads.append(self.grads[offset:offset + b])
            offset += b
        # bumped whenever params change so stale caches can be detected
        self.version = 0

        if params is None:
            rng = np.random.default_rng(seed)
            for w in self.weights:
                w[...] = rng.normal(0.0, math.sqrt(2.0 / w.shape[0]), size=w.shape)
        else:
            params = np.asarray(params, dtype=np.float64)
            if params.shape != self.params.shape:
                raise ShapeError(f"expected {self.params.shape} params, got {params.shape}")
            self.params[...] = params

    @property
    def rep_dim(self):
        return self.encoder_dims[-1] if self.encoder_dims else self.in_dim

    @property
    def n_encoder_params(self):
        return sum(a * b + b for a, b in self.shapes[:-1])

    def encoder_params(self):
        return self.params[:self.n_encoder_params]

    def head_params(self):
        return self.params[self.n_encoder_params:]

    def zero_grad(self):
        self.grads[...] = 0.0

    def mark_updated(self):
        self.version += 1

    def with_head(self, head, head_dim, seed=0, head_params=None):
        """New network sharing a copy of this encoder, with a fresh head."""
        net = Network(self.in_dim, self.encoder_dims, head, head_dim, seed=seed)
        net.params[:self.n_encoder_params] = self.encoder_params()
        if head_params is not None:
            net.params[self.n_encoder_params:] = head_params
        return net

    def copy(self):
        return Network(self.in_dim, self.encoder_dims, self.head, self.head_dim,
                       params=self.params.copy())

    def describe(self):
        return {"in_dim": self.in_dim, "encoder_dims": list(self.encoder_dims),
                "head": self.head, "head_dim": self.head_dim}


@dataclass
class Cache:
    """Intermediates from :func:`forward`, consumed by :func:`backward`."""

    version: int
    activations: list  # input to each layer (the first is the batch itself)
    relu_masks: list
    head_pre: np.ndarray
    head_norms: np.ndarray | None
    outputs: np.ndarray


def _as_batch(x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    return x


def encode(net: Network, x) -> np.ndarray:
    """Representations ``z`` only, without touching the head."""
    h = _as_batch(x)
    if h.shape[1] != net.in_dim:
        raise ShapeError(f"input has {h.shape[1]} columns, network expects {net.in_dim}")
    for w, b in zip(net.weights[:-1], net.biases[:-1]):
        h = np.maximum(h @ w + b, 0.0)
    return h


def forward(net: Network, x):
    """Run the network on a batch; returns ``(representations, outputs, cache)``."""
    h = _as_batch(x)
    if h.shape[1] != net.in_dim:
        raise ShapeError(f"input has {h.shape[1]} columns, network expects {net.in_dim}")
    activations, masks = [], []
    for w, b in zip(net.weights[:-1], net.biases[:-1]):
        activations.append(h)
        pre = h @ w + b
        mask = pre > 0
        masks.append(mask)
        h = pre * mask
    z = h
    activations.append(z)
    u = z @ net.weights[-1] + net.biases[-1]
    norms = None
    if net.head == PROJECTION:
        norms = np.maximum(np.linalg.norm(u, axis=1, keepdims=True), _NORM_EPS)
        out = u / norms
    else:
        out = u
    return z, out, Cache(net.version, activations, masks, u, norms, out)


def backward(net: Network, cache: Cache, d_outputs) -> None:
    """Accumulate d(loss)/d(params) into ``net.grads`` given d(loss)/d(outputs)."""
    if cache.version != net.version:
        raise ContractError("cache was produced before the last parameter update")
    g = np.asarray(d_outputs, dtype=np.float64)
    if g.shape != cache.outputs.shape:
        raise ShapeError(f"d_outputs shape {g.shape} != outputs shape {cache.outputs.shape}")
    if net.head == PROJECTION:
        y = cache.outputs
        g = (g - y * np.sum(y * g, axis=1, keepdims=True)) / cache.head_norms
    for layer in range(len(net.shapes) - 1, -1, -1):
        a = cache.activations[layer]
        net.weight_grads[layer] += a.T @ g
        net.bias_grads[layer] += g.sum(axis=0)
        if layer > 0:
            g = (g @ net.weights[layer].T) * cache.relu_masks[layer - 1]


@dataclass
class OptimizerState:
    """SGD-with-momentum state plus the cosine/warm-restart learning-rate plan."""

    learning_rate_base: float
    velocity: np.ndarray
    momentum: float = 0.9
    weight_decay: float = 1e-4
    restart_epochs: list = field(default_factory=lambda: [200, 400])
    warmup_epochs: int = 1
    decay_biases: bool = False

    def __post_init__(self):
        if self.learning_rate_base < 0:
            raise ValueError("learning_rate_base must be non-negative")
        if self.warmup_epochs < 0:
            raise ValueError("warmup_epochs must be non-negative")
        self.restart_epochs = sorted(int(r) for r in self.restart_epochs)

    @classmethod
    def for_network(cls, net, learning_rate_base, **kwargs):
        return cls(learning_rate_base, np.zeros_like(net.params), **kwargs)


def sgd_step(net: Network, opt: OptimizerState, lr: float) -> np.ndarray:
    """One momentum SGD update with L2 weight decay folded into the gradient."""
    if opt.velocity.shape != net.params.shape:
        raise ShapeError("optimizer velocity does not match network parameters")
    bad = np.flatnonzero(~np.isfinite(net.grads))
    if bad.size:
        raise NumericError(f"non-finite gradient at parameter {bad[0]}", index=int(bad[0]))
    g = net.grads
    if opt.weight_decay:
        decay = net.params if opt.decay_biases else net.params * net.decay_mask
        g = g + opt.weight_decay * decay
    opt.velocity *= opt.momentum
    opt.velocity += g
    net.params -= lr * opt.velocity
    net.zero_grad()
    net.mark_updated()
    return net.params


def lr_at(opt: OptimizerState, epoch: int, total_epochs: int, fraction: float = 1.0) -> float:
    """Learning rate for ``epoch`` under cosine annealing with warm restarts.

    Restarts split ``1..total_epochs`` into cycles ``(b_prev, b]``. Inside a
    cycle of length ``L``, at position ``t = epoch - b_prev``, the first
    ``warmup_epochs`` positions ramp linearly up to the base rate and the rest
    follow ``0.5 * base * (1 + cos(pi * (t - w) / (L - w)))``.

    ``fraction`` in (0, 1] is how far through the epoch the caller is. It only
    matters during warmup, where the ramp then advances per batch instead of
    jumping straight to the end-of-epoch value.
    """
    if not 1 <= epoch <= total_epochs:
        raise ValueError(f"epoch {epoch} outside [1, {total_epochs}]")
    bounds = [0] + [r for r in opt.restart_epochs if 0 < r < total_epochs] + [total_epochs]
    for start, end in zip(bounds[:-1], bounds[1:]):
        if epoch <= end:
            break
    length, t = end - start, epoch - start
    w = min(opt.warmup_epochs, length)
    base = opt.learning_rate_base
    if t <= w:
        return base * (t - 1 + fraction) / w
    return 0.5 * base * (1.0 + math.cos(math.pi * (t - w) / (length - w)))


def save_checkpoint(net: Network, path) -> None:
    """Write shapes and parameters as JSON (float repr round-trips exactly)."""
    record = {"version": CHECKPOINT_VERSION, **net.describe(),
              "params": net.params.tolist()}
    Path(path).write_text(json.dumps(record))


def load_checkpoint(path) -> Network:
    record = json.loads(Path(path).read_text())
    if record.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {record.get('version')!r}")
    return Network(record["in_dim"], record["encoder_dims"], record["head"],
                   record["head_dim"], params=record["params"])
