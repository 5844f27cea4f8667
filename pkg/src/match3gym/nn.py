"""A small dense network written directly in numpy.

The architecture is ``82 -> 100 -> 200 -> 324``: two hidden layers, each an
affine map followed by batch normalization and ReLU, and a linear head whose
outputs are both the Q-value estimates (logits) and, through softmax, the move
probabilities.

Inputs are row-major batches of shape ``(batch, features)``; a 1-D vector is
treated as a batch of one and results are squeezed back.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .errors import CheckpointError, ModeError, ShapeError

ARCH = (82, 100, 200, 324)
PARAM_NAMES = ("w", "b", "gain", "shift")
BN_MOMENTUM = 0.99
BN_EPS = 1e-5

Gradients = list  # one {"w", "b", ["gain", "shift"]} dict per layer


@dataclass
class BatchNorm:
    gain: np.ndarray
    shift: np.ndarray
    mean: np.ndarray
    var: np.ndarray
    eps: float = BN_EPS

    @classmethod
    def identity(cls, size: int, eps: float = BN_EPS) -> BatchNorm:
        return cls(np.ones(size), np.zeros(size), np.zeros(size), np.ones(size), eps)


@dataclass
class DenseLayer:
    w: np.ndarray
    b: np.ndarray
    bn: BatchNorm | None = None

    @property
    def n_in(self) -> int:
        return self.w.shape[1]

    @property
    def n_out(self) -> int:
        return self.w.shape[0]

    def params(self) -> dict[str, np.ndarray]:
        out = {"w": self.w, "b": self.b}
        if self.bn is not None:
            out["gain"] = self.bn.gain
            out["shift"] = self.bn.shift
        return out


class Network:
    def __init__(self, layers: list[DenseLayer]):
        for prev, nxt in zip(layers, layers[1:]):
            if prev.n_out != nxt.n_in:
                raise ShapeError(f"layer sizes do not chain: {prev.n_out} -> {nxt.n_in}")
        self.layers = layers

    @classmethod
    def create(cls, sizes: tuple[int, ...] = ARCH, rng: np.random.Generator | None = None, zero: bool = False) -> Network:
        """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases, identity batch norm."""
        rng = rng if rng is not None else np.random.default_rng(0)
        layers = []
        for i, (n_in, n_out) in enumerate(zip(sizes, sizes[1:])):
            if zero:
                w = np.zeros((n_out, n_in))
            else:
                bound = 1.0 / math.sqrt(n_in)
                w = rng.uniform(-bound, bound, size=(n_out, n_in))
            hidden = i < len(sizes) - 2
            layers.append(DenseLayer(w, np.zeros(n_out), BatchNorm.identity(n_out) if hidden else None))
        return cls(layers)

    @property
    def sizes(self) -> tuple[int, ...]:
        return (self.layers[0].n_in,) + tuple(layer.n_out for layer in self.layers)

    def copy(self) -> Network:
        clone = Network.create(self.sizes, zero=True)
        clone_weights(self, clone)
        return clone

    def __call__(self, x: np.ndarray) -> np.ndarray:
        """Inference-mode probabilities."""
        return forward(self, x, "infer")[1]


@dataclass
class ForwardCache:
    mode: str
    entries: list = field(default_factory=list)
    batched: bool = True


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def forward(net: Network, x: np.ndarray, mode: str = "infer") -> tuple[np.ndarray, np.ndarray, ForwardCache]:
    """Return ``(logits, probabilities, cache)``.

    Train mode normalizes hidden activations with batch statistics and folds
    them into the running averages, except for single-sample batches which use
    the running statistics in both modes.
    """
    if mode not in ("train", "infer"):
        raise ModeError(f"unknown mode {mode!r}")
    x = np.asarray(x, dtype=np.float64)
    batched = x.ndim == 2
    h = np.atleast_2d(x)
    if h.ndim != 2 or h.shape[1] != net.sizes[0]:
        raise ShapeError(f"expected input of length {net.sizes[0]}, got shape {x.shape}")
    cache = ForwardCache(mode=mode, batched=batched)
    n_layers = len(net.layers)
    for i, layer in enumerate(net.layers):
        entry: dict[str, Any] = {"x": h}
        y = h @ layer.w.T + layer.b
        bn = layer.bn
        if bn is not None:
            use_batch = mode == "train" and h.shape[0] > 1
            if use_batch:
                mu = y.mean(axis=0)
                var = y.var(axis=0)
                bn.mean = BN_MOMENTUM * bn.mean + (1 - BN_MOMENTUM) * mu
                bn.var = BN_MOMENTUM * bn.var + (1 - BN_MOMENTUM) * var
            else:
                mu, var = bn.mean, bn.var
            inv = 1.0 / np.sqrt(var + bn.eps)
            xhat = (y - mu) * inv
            entry.update(xhat=xhat, inv=inv, batch_stats=use_batch)
            y = bn.gain * xhat + bn.shift
        if i < n_layers - 1:
            mask = y > 0
            entry["mask"] = mask
            h = y * mask
        else:
            h = y
        cache.entries.append(entry)
    logits = h
    probs = softmax(logits)
    if not batched:
        return logits[0], probs[0], cache
    return logits, probs, cache


def backward(net: Network, cache: ForwardCache, loss_grad: np.ndarray) -> Gradients:
    """Gradients of the loss for every parameter, given dLoss/dlogits."""
    if cache.mode != "train":
        raise ModeError("backward needs a cache from a train-mode forward pass")
    g = np.atleast_2d(np.asarray(loss_grad, dtype=np.float64))
    if g.shape[1] != net.sizes[-1] or g.shape[0] != cache.entries[0]["x"].shape[0]:
        raise ShapeError(f"loss gradient shape {g.shape} does not match network output")
    grads: Gradients = [None] * len(net.layers)
    for i in reversed(range(len(net.layers))):
        layer = net.layers[i]
        entry = cache.entries[i]
        if "mask" in entry:
            g = g * entry["mask"]
        layer_grads = {}
        if layer.bn is not None:
            xhat = entry["xhat"]
            layer_grads["gain"] = (g * xhat).sum(axis=0)
            layer_grads["shift"] = g.sum(axis=0)
            dxhat = g * layer.bn.gain
            inv = entry["inv"]
            if entry["batch_stats"]:
                n = g.shape[0]
                g = inv / n * (n * dxhat - dxhat.sum(axis=0) - xhat * (dxhat * xhat).sum(axis=0))
            else:
                g = dxhat * inv
        layer_grads["w"] = g.T @ entry["x"]
        layer_grads["b"] = g.sum(axis=0)
        g = g @ layer.w
        grads[i] = layer_grads
    return grads


def mse_loss(prediction: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    prediction = np.asarray(prediction, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if prediction.shape != target.shape:
        raise ShapeError(f"prediction {prediction.shape} and target {target.shape} differ")
    diff = prediction - target
    return float(np.mean(diff**2)), 2.0 * diff / diff.size


def cross_entropy_loss(probabilities: np.ndarray, target_index) -> tuple[float, np.ndarray]:
    """Categorical cross entropy; the gradient is taken w.r.t. the pre-softmax logits.

    Batched probabilities take an array of target indices and average the loss.
    """
    probs = np.asarray(probabilities, dtype=np.float64)
    batched = probs.ndim == 2
    p = np.atleast_2d(probs)
    idx = np.atleast_1d(np.asarray(target_index))
    if idx.shape[0] != p.shape[0]:
        raise ShapeError("one target index per row is required")
    if np.any(idx < 0) or np.any(idx >= p.shape[1]):
        raise IndexError(f"target index out of range 0..{p.shape[1] - 1}")
    rows = np.arange(p.shape[0])
    picked = p[rows, idx]
    loss = float(-np.mean(np.log(np.maximum(picked, 1e-300))))
    grad = p.copy()
    grad[rows, idx] -= 1.0
    grad /= p.shape[0]
    return loss, grad if batched else grad[0]


@dataclass
class AdamState:
    m: list
    v: list
    step_count: int = 0
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_network(cls, net: Network, lr: float = 0.001, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> AdamState:
        m = [{k: np.zeros_like(p) for k, p in layer.params().items()} for layer in net.layers]
        v = [{k: np.zeros_like(p) for k, p in layer.params().items()} for layer in net.layers]
        return cls(m, v, 0, lr, beta1, beta2, eps)


def _check_congruent(net: Network, grads: Gradients, what: str = "gradients") -> None:
    if len(grads) != len(net.layers):
        raise ShapeError(f"{what} have {len(grads)} layers, network has {len(net.layers)}")
    for i, (layer, g) in enumerate(zip(net.layers, grads)):
        params = layer.params()
        if set(g) != set(params):
            raise ShapeError(f"{what} for layer {i} have keys {sorted(g)}, expected {sorted(params)}")
        for k, p in params.items():
            if g[k].shape != p.shape:
                raise ShapeError(f"{what} layer {i} '{k}' shape {g[k].shape} != {p.shape}")


def adam_step(net: Network, grads: Gradients, opt: AdamState) -> tuple[Network, AdamState]:
    """Bias-corrected Adam update, applied in place."""
    _check_congruent(net, grads)
    _check_congruent(net, opt.m, "adam moments")
    opt.step_count += 1
    t = opt.step_count
    c1 = 1 - opt.beta1**t
    c2 = 1 - opt.beta2**t
    for layer, g, m, v in zip(net.layers, grads, opt.m, opt.v):
        for k, p in layer.params().items():
            m[k] *= opt.beta1
            m[k] += (1 - opt.beta1) * g[k]
            v[k] *= opt.beta2
            v[k] += (1 - opt.beta2) * g[k] ** 2
            p -= opt.lr * (m[k] / c1) / (np.sqrt(v[k] / c2) + opt.eps)
    return net, opt


def fit_step(net: Network, opt: AdamState, x: np.ndarray, target, loss: str = "mse") -> float:
    """One forward/backward/Adam step. ``target`` is a vector for MSE or indices for cross entropy."""
    logits, probs, cache = forward(net, x, "train")
    if loss == "mse":
        value, grad = mse_loss(logits, target)
    elif loss == "cross_entropy":
        value, grad = cross_entropy_loss(probs, target)
    else:
        raise ValueError(f"unknown loss {loss!r}")
    adam_step(net, backward(net, cache, grad), opt)
    return value


def clone_weights(source: Network, destination: Network) -> None:
    """Copy every parameter and running statistic of ``source`` into ``destination``."""
    if source.sizes != destination.sizes:
        raise ShapeError(f"architecture mismatch: {source.sizes} vs {destination.sizes}")
    for src, dst in zip(source.layers, destination.layers):
        if (src.bn is None) != (dst.bn is None):
            raise ShapeError("batch-norm placement differs between networks")
        dst.w = src.w.copy()
        dst.b = src.b.copy()
        if src.bn is not None:
            dst.bn = BatchNorm(src.bn.gain.copy(), src.bn.shift.copy(), src.bn.mean.copy(), src.bn.var.copy(), src.bn.eps)


# ---------------------------------------------------------------------------
# Checkpoints


def _adam_to_doc(opt: AdamState) -> dict:
    return {
        "step_count": opt.step_count,
        "lr": opt.lr,
        "beta1": opt.beta1,
        "beta2": opt.beta2,
        "eps": opt.eps,
        "m": [{k: a.tolist() for k, a in d.items()} for d in opt.m],
        "v": [{k: a.tolist() for k, a in d.items()} for d in opt.v],
    }


def checkpoint_document(net: Network, opt: AdamState | None = None, meta: dict | None = None) -> dict:
    layers = []
    for layer in net.layers:
        bn = None
        if layer.bn is not None:
            bn = {
                "gain": layer.bn.gain.tolist(),
                "shift": layer.bn.shift.tolist(),
                "mean": layer.bn.mean.tolist(),
                "var": layer.bn.var.tolist(),
                "eps": layer.bn.eps,
            }
        layers.append({"w": layer.w.tolist(), "b": layer.b.tolist(), "bn": bn})
    meta = dict(meta or {})
    meta.setdefault("seed", None)
    # Pinned to SOURCE_DATE_EPOCH (when set) so identical runs write identical files.
    meta.setdefault("created", os.environ.get("SOURCE_DATE_EPOCH"))
    meta.setdefault("episodes_trained", 0)
    doc = {"arch": list(net.sizes), "layers": layers, "meta": meta}
    if opt is not None:
        doc["adam"] = _adam_to_doc(opt)
    return doc


def save_checkpoint(net: Network, path: str | Path, opt: AdamState | None = None, meta: dict | None = None) -> None:
    Path(path).write_text(json.dumps(checkpoint_document(net, opt, meta)))


def _array(doc: Any, section: str, shape: tuple[int, ...]) -> np.ndarray:
    try:
        arr = np.array(doc, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise CheckpointError(f"section '{section}' is not numeric") from exc
    if arr.shape != shape:
        raise ShapeError(f"section '{section}' has shape {arr.shape}, expected {shape}")
    return arr


def read_checkpoint(path: str | Path, arch: tuple[int, ...] | None = ARCH) -> tuple[Network, AdamState | None, dict]:
    """Load ``(network, adam_state_or_None, meta)``; ``arch=None`` accepts any architecture."""
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"checkpoint {path} is malformed or truncated: {exc}") from exc
    if not isinstance(doc, dict):
        raise CheckpointError("checkpoint root must be an object")
    for section in ("arch", "layers"):
        if section not in doc:
            raise CheckpointError(f"checkpoint is missing section '{section}'")
    sizes = doc["arch"]
    if not isinstance(sizes, list) or not all(isinstance(s, int) for s in sizes) or len(sizes) < 2:
        raise CheckpointError("section 'arch' must be a list of integers")
    sizes = tuple(sizes)
    if arch is not None and sizes != tuple(arch):
        raise ShapeError(f"checkpoint architecture {list(sizes)} does not match expected {list(arch)}")
    if not isinstance(doc["layers"], list) or len(doc["layers"]) != len(sizes) - 1:
        raise CheckpointError("section 'layers' does not match 'arch'")

    layers = []
    for i, (ldoc, n_in, n_out) in enumerate(zip(doc["layers"], sizes, sizes[1:])):
        where = f"layers[{i}]"
        if not isinstance(ldoc, dict) or "w" not in ldoc or "b" not in ldoc:
            raise CheckpointError(f"section '{where}' needs 'w' and 'b'")
        w = _array(ldoc["w"], f"{where}.w", (n_out, n_in))
        b = _array(ldoc["b"], f"{where}.b", (n_out,))
        bn = None
        if ldoc.get("bn") is not None:
            bdoc = ldoc["bn"]
            try:
                bn = BatchNorm(
                    *(_array(bdoc[k], f"{where}.bn.{k}", (n_out,)) for k in ("gain", "shift", "mean", "var")),
                    eps=float(bdoc["eps"]),
                )
            except (KeyError, TypeError) as exc:
                raise CheckpointError(f"section '{where}.bn' is incomplete: {exc}") from exc
        layers.append(DenseLayer(w, b, bn))
    net = Network(layers)

    opt = None
    if doc.get("adam") is not None:
        adoc = doc["adam"]
        try:
            opt = AdamState(
                m=[{k: np.array(a, dtype=np.float64) for k, a in d.items()} for d in adoc["m"]],
                v=[{k: np.array(a, dtype=np.float64) for k, a in d.items()} for d in adoc["v"]],
                step_count=int(adoc["step_count"]),
                lr=float(adoc["lr"]),
                beta1=float(adoc["beta1"]),
                beta2=float(adoc["beta2"]),
                eps=float(adoc["eps"]),
            )
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise CheckpointError(f"section 'adam' is malformed: {exc}") from exc
        _check_congruent(net, opt.m, "adam moments")
        _check_congruent(net, opt.v, "adam moments")
    return net, opt, dict(doc.get("meta") or {})


def load_checkpoint(path: str | Path, arch: tuple[int, ...] | None = ARCH) -> Network:
    return read_checkpoint(path, arch)[0]
