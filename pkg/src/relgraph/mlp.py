"""One-hidden-layer perceptron for link scoring: ReLU hidden layer, logistic output."""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import seeding

MLP_MAGIC = b"RGMLP\x00\x00\x00"
MLP_VERSION = 1
HIDDEN_BIAS_INIT = 0.1


class MlpError(ValueError):
    pass


@dataclass
class MlpConfig:
    hidden: int = 64
    epochs: int = 50
    batch_size: int = 128
    lr: float = 0.01
    optimizer: str = "adam"
    seed: int = 42

    def __post_init__(self):
        if self.hidden < 1 or self.batch_size < 1 or self.epochs < 0:
            raise ValueError("hidden and batch_size must be >= 1, epochs >= 0")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


@dataclass(eq=False)
class MlpModel:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    loss_history: list = field(default_factory=list)

    @property
    def layer_sizes(self):
        return [self.w1.shape[0], self.w1.shape[1], self.w2.shape[1]]

    def params(self):
        return [self.w1, self.b1, self.w2, self.b2]

    def copy(self):
        return MlpModel(*(p.copy() for p in self.params()), list(self.loss_history))

    def equals(self, other):
        return all(np.array_equal(a, b) for a, b in zip(self.params(), other.params()))


def init_mlp(n_in, hidden, seed):
    """Fan-balanced uniform weights; small positive hidden biases keep ReLUs alive."""
    rng = seeding.rng(seed, "mlp-init")
    a1 = np.sqrt(6.0 / (n_in + hidden))
    a2 = np.sqrt(6.0 / (hidden + 1))
    return MlpModel(
        rng.uniform(-a1, a1, (n_in, hidden)), np.full(hidden, HIDDEN_BIAS_INIT),
        rng.uniform(-a2, a2, (hidden, 1)), np.zeros(1))


def _logits(model, x):
    h_pre = x @ model.w1 + model.b1
    h = np.maximum(h_pre, 0.0)
    return (h @ model.w2 + model.b2)[:, 0], h_pre, h


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def bce_loss(model, x, y):
    """Mean binary cross-entropy, computed from logits for stability."""
    z, _, _ = _logits(model, np.atleast_2d(x))
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    # -[y log s(z) + (1-y) log(1-s(z))] = softplus(z) - y z
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


def loss_gradients(model, x, y):
    """Backpropagated gradients of :func:`bce_loss` as ``[dw1, db1, dw2, db2]``."""
    x = np.atleast_2d(x)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    z, h_pre, h = _logits(model, x)
    dz = (_sigmoid(z) - y)[:, None] / len(y)
    dw2 = h.T @ dz
    db2 = dz.sum(axis=0)
    dh = (dz @ model.w2.T) * (h_pre > 0)
    dw1 = x.T @ dh
    db1 = dh.sum(axis=0)
    return [dw1, db1, dw2, db2]


def train_mlp(features, labels, config):
    """Mini-batch training on mean binary cross-entropy; returns a fresh model.

    ``model.loss_history`` holds the full-data loss before training and after
    each epoch.
    """
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64).reshape(-1)
    if x.ndim != 2 or len(x) != len(y) or len(y) < 2:
        raise MlpError("features must be a 2-D matrix with one row per label (at least two)")
    if not np.isfinite(x).all():
        raise MlpError("features contain non-finite values")
    if not np.all((y == 0) | (y == 1)):
        raise MlpError("labels must be 0 or 1")
    if y.min() == y.max():
        raise MlpError("training data contains a single class")
    model = init_mlp(x.shape[1], config.hidden, config.seed)
    model.loss_history.append(bce_loss(model, x, y))
    rng = seeding.rng(config.seed, "mlp-shuffle")
    params = model.params()
    m = [np.zeros_like(p) for p in params]
    v = [np.zeros_like(p) for p in params]
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    step = 0
    for _ in range(config.epochs):
        order = rng.permutation(len(y))
        for start in range(0, len(y), config.batch_size):
            idx = order[start:start + config.batch_size]
            grads = loss_gradients(model, x[idx], y[idx])
            step += 1
            for p, g, mi, vi in zip(params, grads, m, v):
                if config.optimizer == "sgd":
                    p -= config.lr * g
                    continue
                mi *= beta1
                mi += (1 - beta1) * g
                vi *= beta2
                vi += (1 - beta2) * g * g
                mhat = mi / (1 - beta1 ** step)
                vhat = vi / (1 - beta2 ** step)
                p -= config.lr * mhat / (np.sqrt(vhat) + eps)
        model.loss_history.append(bce_loss(model, x, y))
    if not all(np.isfinite(p).all() for p in params):
        raise MlpError("training produced non-finite parameters")
    return model


def predict_proba(model, features):
    """Link probability for one feature vector (scalar) or a matrix of them (array)."""
    x = np.asarray(features, dtype=np.float64)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != model.w1.shape[0]:
        raise MlpError(f"dimension mismatch: model expects {model.w1.shape[0]} features, got {x.shape[1]}")
    p = _sigmoid(_logits(model, x)[0])
    return float(p[0]) if single else p


def mlp_gradient_check(model, feature, label, h=1e-5, atol=1e-6):
    """Max relative error between backprop and central finite differences.

    Relative error per parameter is ``|a - n| / max(|a|, |n|, atol)``; the
    floor keeps near-zero gradients from inflating the ratio.
    """
    x = np.atleast_2d(np.asarray(feature, dtype=np.float64))
    y = np.atleast_1d(np.asarray(label, dtype=np.float64))
    analytic = loss_gradients(model, x, y)
    worst = 0.0
    probe = model.copy()
    for p, g in zip(probe.params(), analytic):
        flat = p.reshape(-1)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + h
            up = bce_loss(probe, x, y)
            flat[i] = old - h
            down = bce_loss(probe, x, y)
            flat[i] = old
            num = (up - down) / (2 * h)
            a = g.reshape(-1)[i]
            worst = max(worst, abs(a - num) / max(abs(a), abs(num), atol))
    return worst


def save_mlp(model, path):
    """magic, u32 version, u32 n_in, u32 hidden, u32 n_out, then float64 w1, b1, w2, b2."""
    n_in, hidden, n_out = model.layer_sizes
    with open(path, "wb") as fh:
        fh.write(MLP_MAGIC + struct.pack("<4I", MLP_VERSION, n_in, hidden, n_out))
        for p in model.params():
            fh.write(np.ascontiguousarray(p, dtype="<f8").tobytes())


def load_mlp(path):
    data = Path(path).read_bytes()
    if data[:8] != MLP_MAGIC:
        raise MlpError(f"{path}: not a model file")
    version, n_in, hidden, n_out = struct.unpack_from("<4I", data, 8)
    if version != MLP_VERSION:
        raise MlpError(f"{path}: model version {version}, expected {MLP_VERSION}")
    shapes = [(n_in, hidden), (hidden,), (hidden, n_out), (n_out,)]
    sizes = [int(np.prod(s)) for s in shapes]
    body = np.frombuffer(data, dtype="<f8", offset=24)
    if body.size != sum(sizes):
        raise MlpError(f"{path}: truncated model body")
    parts, pos = [], 0
    for shape, size in zip(shapes, sizes):
        parts.append(body[pos:pos + size].reshape(shape).astype(np.float64))
        pos += size
    return MlpModel(*parts)
