"""Small differentiable classifiers with closed-form per-sample gradients.

Two desk-scale architectures: a linear softmax classifier and a
one-hidden-layer MLP (tanh or relu). Parameters live in a single flat
float64 vector so the weighted SGD update is one axpy. Losses are
cross-entropy against label-smoothed targets, computed via a max-shifted
log-sum-exp.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteLossError

ACTIVATIONS = ("tanh", "relu")


@dataclass(frozen=True)
class Architecture:
    """Shape descriptor; ``hidden_dim`` None selects the linear model."""

    input_dim: int
    n_classes: int
    hidden_dim: int | None = None
    activation: str = "tanh"

    def __post_init__(self):
        if self.input_dim < 1 or self.n_classes < 2:
            raise ValueError("need input_dim >= 1 and n_classes >= 2")
        if self.hidden_dim is not None and self.hidden_dim < 1:
            raise ValueError("hidden_dim must be positive when present")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}")

    @property
    def param_count(self) -> int:
        d, k = self.input_dim, self.n_classes
        if self.hidden_dim is None:
            return k * d + k
        h = self.hidden_dim
        return h * d + h + k * h + k

    def to_json(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "n_classes": self.n_classes,
            "hidden_dim": self.hidden_dim,
            "activation": self.activation,
        }

    @classmethod
    def from_json(cls, payload: dict) -> "Architecture":
        return cls(
            input_dim=int(payload["input_dim"]),
            n_classes=int(payload["n_classes"]),
            hidden_dim=None if payload.get("hidden_dim") is None else int(payload["hidden_dim"]),
            activation=str(payload.get("activation", "tanh")),
        )


def init_params(arch: Architecture, seed) -> np.ndarray:
    """Seeded uniform [-s, s] init with s = 1/sqrt(fan_in) per layer."""
    rng = np.random.default_rng(seed)
    chunks = []
    for fan_in, size in _layer_shapes(arch):
        s = 1.0 / np.sqrt(fan_in)
        chunks.append(rng.uniform(-s, s, size=size))
    return np.concatenate(chunks)


def _layer_shapes(arch: Architecture):
    d, k = arch.input_dim, arch.n_classes
    if arch.hidden_dim is None:
        return [(d, k * d), (d, k)]  # W (k x d), b (k)
    h = arch.hidden_dim
    return [(d, h * d), (d, h), (h, k * h), (h, k)]


def _unpack(params: np.ndarray, arch: Architecture):
    d, k = arch.input_dim, arch.n_classes
    if params.size != arch.param_count:
        raise ValueError(
            f"parameter vector has {params.size} entries, expected {arch.param_count}"
        )
    if arch.hidden_dim is None:
        w = params[: k * d].reshape(k, d)
        b = params[k * d :]
        return w, b
    h = arch.hidden_dim
    off = 0
    w1 = params[off : off + h * d].reshape(h, d)
    off += h * d
    b1 = params[off : off + h]
    off += h
    w2 = params[off : off + k * h].reshape(k, h)
    off += k * h
    b2 = params[off :]
    return w1, b1, w2, b2


def smooth_labels(y: int, n_classes: int, smoothing: float) -> np.ndarray:
    """Mixture (1 - a) * onehot(y) + (a / K) * ones for a in [0, 1)."""
    if not (0 <= y < n_classes):
        raise ValueError(f"class index {y} outside [0, {n_classes})")
    if not (0.0 <= smoothing < 1.0):
        raise ValueError("smoothing coefficient must lie in [0, 1)")
    out = np.full(n_classes, smoothing / n_classes)
    out[y] += 1.0 - smoothing
    return out


def smooth_label_matrix(labels, n_classes: int, smoothing: float) -> np.ndarray:
    """Stacked smoothed targets, one row per label."""
    labels = np.asarray(labels)
    return np.stack([smooth_labels(int(y), n_classes, smoothing) for y in labels])


def forward_logits(params: np.ndarray, arch: Architecture, inputs: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(np.asarray(inputs, dtype=float))
    if arch.hidden_dim is None:
        w, b = _unpack(params, arch)
        return x @ w.T + b
    w1, b1, w2, b2 = _unpack(params, arch)
    hidden = _activate(x @ w1.T + b1, arch.activation)
    return hidden @ w2.T + b2


def _activate(pre: np.ndarray, kind: str) -> np.ndarray:
    if kind == "tanh":
        return np.tanh(pre)
    return np.maximum(pre, 0.0)


def _activate_grad(pre: np.ndarray, kind: str) -> np.ndarray:
    if kind == "tanh":
        t = np.tanh(pre)
        return 1.0 - t * t
    return (pre > 0.0).astype(float)


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def per_sample_losses(
    params: np.ndarray, arch: Architecture, inputs: np.ndarray, targets: np.ndarray
) -> np.ndarray:
    """Cross-entropy of the softmax outputs against the (smoothed) targets,
    one scalar per row, via max-shifted log-sum-exp."""
    logits = forward_logits(params, arch, inputs)
    if not np.all(np.isfinite(logits)):
        raise NonFiniteLossError("non-finite activations in forward pass")
    t = np.atleast_2d(np.asarray(targets, dtype=float))
    if t.shape != logits.shape:
        raise ValueError(f"targets shape {t.shape} does not match logits {logits.shape}")
    zmax = logits.max(axis=1, keepdims=True)
    log_probs = logits - zmax - np.log(np.exp(logits - zmax).sum(axis=1, keepdims=True))
    return -(t * log_probs).sum(axis=1)


def per_sample_gradients(
    params: np.ndarray, arch: Architecture, inputs: np.ndarray, targets: np.ndarray
) -> np.ndarray:
    """Analytic backprop gradients, one flat row per sample (B x P).

    Because the targets sum to one, the logit gradient is softmax - target
    for smoothed labels exactly as for one-hot ones.
    """
    x = np.atleast_2d(np.asarray(inputs, dtype=float))
    t = np.atleast_2d(np.asarray(targets, dtype=float))
    n = x.shape[0]
    if arch.hidden_dim is None:
        w, _ = _unpack(params, arch)
        logits = forward_logits(params, arch, x)
        delta = softmax(logits) - t  # B x K
        grad_w = delta[:, :, None] * x[:, None, :]  # B x K x d
        return np.concatenate([grad_w.reshape(n, -1), delta], axis=1)

    w1, b1, w2, b2 = _unpack(params, arch)
    pre = x @ w1.T + b1
    hidden = _activate(pre, arch.activation)
    logits = hidden @ w2.T + b2
    delta2 = softmax(logits) - t  # B x K
    grad_w2 = delta2[:, :, None] * hidden[:, None, :]  # B x K x h
    delta1 = (delta2 @ w2) * _activate_grad(pre, arch.activation)  # B x h
    grad_w1 = delta1[:, :, None] * x[:, None, :]  # B x h x d
    return np.concatenate(
        [grad_w1.reshape(n, -1), delta1, grad_w2.reshape(n, -1), delta2], axis=1
    )


def weighted_step(
    params: np.ndarray, grads: np.ndarray, weights: np.ndarray, lr: float
) -> np.ndarray:
    """SGD update theta' = theta - lr * sum_i q_i * g_i."""
    g = np.asarray(grads, dtype=float)
    q = np.asarray(weights, dtype=float)
    if g.ndim != 2 or g.shape[0] != q.size:
        raise ValueError("need one gradient row per weight")
    if g.shape[1] != params.size:
        raise ValueError("gradient width does not match parameter count")
    updated = params - lr * (q @ g)
    if not np.all(np.isfinite(updated)):
        raise NonFiniteLossError("non-finite parameters after update")
    return updated


def predict(params: np.ndarray, arch: Architecture, inputs: np.ndarray) -> np.ndarray:
    return np.argmax(forward_logits(params, arch, inputs), axis=1)


def checkpoint_dict(arch: Architecture, params: np.ndarray) -> dict:
    """JSON-ready checkpoint; floats serialize as decimal and round-trip."""
    return {"architecture": arch.to_json(), "params": [float(v) for v in params]}


def load_checkpoint(payload: dict) -> tuple[Architecture, np.ndarray]:
    arch = Architecture.from_json(payload["architecture"])
    params = np.asarray(payload["params"], dtype=float)
    if params.size != arch.param_count:
        raise ValueError("checkpoint parameter count does not match architecture")
    return arch, params
