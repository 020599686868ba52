"""Minimal dense-network engine: layers, gradients, Adam, counting, checkpoints.

Weights are stored (in_dim, out_dim) so a batch ``x`` of shape (B, in_dim)
maps to ``x @ W + b``.  All math runs in float64.  FLOPs are counted as
2 per multiply-accumulate of the dense matmuls only; shared layers count
once per application.
"""

from __future__ import annotations

import json
import struct

import numpy as np

ACTIVATIONS = ("relu", "sigmoid", "identity")

CHECKPOINT_MAGIC = b"FTNN"
CHECKPOINT_VERSION = 1


class DenseLayer:
    """One fully-connected layer with a fixed elementwise activation."""

    def __init__(self, in_dim: int, out_dim: int, activation: str = "identity",
                 rng: np.random.Generator | None = None):
        if in_dim <= 0 or out_dim <= 0:
            raise ValueError("layer dimensions must be positive")
        if activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation: {activation!r}")
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.activation = activation
        if rng is None:
            rng = np.random.default_rng(0)
        # Glorot-style uniform fan-based init
        limit = np.sqrt(6.0 / (in_dim + out_dim))
        self.weights = rng.uniform(-limit, limit, size=(in_dim, out_dim))
        self.biases = np.zeros(out_dim)

    @property
    def n_params(self) -> int:
        return self.in_dim * self.out_dim + self.out_dim

    @property
    def flops_per_apply(self) -> int:
        return 2 * self.in_dim * self.out_dim

    def forward(self, x: np.ndarray):
        """Returns (activation(x @ W + b), cache for backward)."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.in_dim:
            raise ValueError(
                f"expected last dim {self.in_dim}, got {x.shape[-1]}")
        z = x @ self.weights + self.biases
        if self.activation == "relu":
            a = np.maximum(z, 0.0)
        elif self.activation == "sigmoid":
            a = 1.0 / (1.0 + np.exp(-z))
        else:
            a = z
        return a, (x, z, a)

    def backward(self, cache, grad_out: np.ndarray):
        """Returns (grad_x, grad_weights, grad_biases)."""
        x, z, a = cache
        grad_out = np.asarray(grad_out, dtype=float)
        if grad_out.shape != z.shape:
            raise ValueError("upstream gradient shape mismatch")
        if self.activation == "relu":
            grad_z = grad_out * (z > 0.0)
        elif self.activation == "sigmoid":
            grad_z = grad_out * a * (1.0 - a)
        else:
            grad_z = grad_out
        x2 = x.reshape(-1, self.in_dim)
        g2 = grad_z.reshape(-1, self.out_dim)
        grad_w = x2.T @ g2
        grad_b = g2.sum(axis=0)
        grad_x = grad_z @ self.weights.T
        return grad_x, grad_w, grad_b


def dense_forward(layer: DenseLayer, x: np.ndarray) -> np.ndarray:
    """Plain forward application without gradient bookkeeping."""
    out, _ = layer.forward(x)
    return out


def mse_loss(pred: np.ndarray, target: np.ndarray):
    """Mean squared error over all elements and its gradient wrt pred."""
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    if pred.shape != target.shape:
        raise ValueError("prediction and target shapes differ")
    diff = pred - target
    loss = float(np.mean(diff * diff))
    grad = 2.0 * diff / diff.size
    return loss, grad


class Adam:
    """Bias-corrected Adam over a fixed list of parameter arrays (in place)."""

    def __init__(self, params: list[np.ndarray], lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-7):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, grads: list[np.ndarray]) -> None:
        if len(grads) != len(self.params):
            raise ValueError("gradient list length mismatch")
        self.step_count += 1
        t = self.step_count
        b1, b2 = self.beta1, self.beta2
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            if g.shape != p.shape:
                raise ValueError("gradient shape mismatch")
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            m_hat = m / (1.0 - b1 ** t)
            v_hat = v / (1.0 - b2 ** t)
            p -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def count_params(layers) -> int:
    """Total parameters over unique layers (shared layers counted once)."""
    seen, total = set(), 0
    for layer in layers:
        if id(layer) not in seen:
            seen.add(id(layer))
            total += layer.n_params
    return total


def count_flops(applications) -> int:
    """Total forward FLOPs; every application counts, shared or not."""
    return sum(layer.flops_per_apply for layer in applications)


def save_checkpoint(path, descriptor: dict, params: list[np.ndarray]) -> None:
    """Write `FTNN` checkpoint: magic, version, JSON descriptor, f32 tensors."""
    blob = json.dumps(descriptor, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<HI", CHECKPOINT_VERSION, len(blob)))
        fh.write(blob)
        fh.write(struct.pack("<I", len(params)))
        for p in params:
            fh.write(struct.pack("<B", p.ndim))
            fh.write(struct.pack(f"<{p.ndim}I", *p.shape))
            fh.write(np.ascontiguousarray(p, dtype="<f4").tobytes())


def load_checkpoint(path):
    """Read an `FTNN` checkpoint back to (descriptor, float64 tensors)."""
    with open(path, "rb") as fh:
        if fh.read(4) != CHECKPOINT_MAGIC:
            raise ValueError("not a model checkpoint (bad magic)")
        version, blob_len = struct.unpack("<HI", fh.read(6))
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        descriptor = json.loads(fh.read(blob_len).decode())
        (n_tensors,) = struct.unpack("<I", fh.read(4))
        params = []
        for _ in range(n_tensors):
            (ndim,) = struct.unpack("<B", fh.read(1))
            shape = struct.unpack(f"<{ndim}I", fh.read(4 * ndim))
            count = int(np.prod(shape)) if ndim else 1
            raw = fh.read(4 * count)
            if len(raw) != 4 * count:
                raise ValueError("truncated checkpoint")
            params.append(np.frombuffer(raw, dtype="<f4").astype(float).reshape(shape))
    return descriptor, params
