"""Neural-net primitives on float64 numpy arrays, forward and backward.

Everything here is written out by hand: valid ("same-length minus kernel")
1-D convolution, width-2 max pooling, dense layers, ReLU, softmax with
cross-entropy, inverted dropout and Adam. Backward passes return gradients
in the same shapes as the corresponding parameters/inputs.

Convolution accumulates one (input-channel, tap) product term at a time, in
channel-major order, starting from the bias. Keeping that summation order
fixed makes the output bit-for-bit reproducible against a plain quadruple
loop, which the tests rely on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def conv_out_len(length: int, kernel: int, padding: int = 0, stride: int = 1) -> int:
    """Output length of a strided 1-D convolution; may be <= 0 for a kernel
    longer than the padded input."""
    if length < 1 or kernel < 1:
        raise ValueError("length and kernel must be positive")
    if padding < 0 or stride < 1:
        raise ValueError("padding must be >= 0 and stride >= 1")
    return (length - kernel + 2 * padding) // stride + 1


def _as_batched(x: np.ndarray) -> tuple[np.ndarray, bool]:
    if x.ndim == 2:
        return x[None], True
    if x.ndim == 3:
        return x, False
    raise ValueError(f"expected a (C, L) or (B, C, L) array, got ndim={x.ndim}")


def conv1d_forward(x: np.ndarray, weights: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Valid cross-correlation: x (C, L) or (B, C, L), weights (F, C, K),
    bias (F,) -> (.., F, L-K+1)."""
    xb, squeeze = _as_batched(x)
    n_filters, n_in, kernel = weights.shape
    if xb.shape[1] != n_in:
        raise ValueError(f"input has {xb.shape[1]} channels, weights expect {n_in}")
    length = xb.shape[2]
    if length < kernel:
        raise ValueError(f"input length {length} is shorter than kernel {kernel}")
    out_len = length - kernel + 1
    out = np.broadcast_to(bias[None, :, None], (xb.shape[0], n_filters, out_len)).copy()
    for c in range(n_in):
        for k in range(kernel):
            out += weights[None, :, c, k, None] * xb[:, None, c, k : k + out_len]
    return out[0] if squeeze else out


def conv1d_backward(
    x: np.ndarray, weights: np.ndarray, grad_out: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients for conv1d_forward: returns (grad_x, grad_w, grad_b)."""
    xb, squeeze = _as_batched(x)
    gb = grad_out[None] if squeeze else grad_out
    n_filters, n_in, kernel = weights.shape
    out_len = xb.shape[2] - kernel + 1
    if gb.shape != (xb.shape[0], n_filters, out_len):
        raise ValueError(f"grad_out shape {gb.shape} does not match forward output")
    grad_b = gb.sum(axis=(0, 2))
    grad_w = np.empty_like(weights)
    grad_x = np.zeros_like(xb)
    for c in range(n_in):
        for k in range(kernel):
            grad_w[:, c, k] = np.einsum("bfi,bi->f", gb, xb[:, c, k : k + out_len])
            grad_x[:, c, k : k + out_len] += np.einsum("bfi,f->bi", gb, weights[:, c, k])
    return (grad_x[0] if squeeze else grad_x), grad_w, grad_b


def maxpool_forward(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Width-2, stride-2 max pooling over the last axis; a trailing odd
    element is dropped. Ties pick the earlier element. Returns the pooled
    array and the absolute argmax indices used by the backward pass."""
    xb, squeeze = _as_batched(x)
    length = xb.shape[2]
    if length < 2:
        raise ValueError(f"input length {length} is too short to pool")
    n_pairs = length // 2
    pairs = xb[:, :, : 2 * n_pairs].reshape(xb.shape[0], xb.shape[1], n_pairs, 2)
    first_wins = pairs[..., 0] >= pairs[..., 1]
    pooled = np.where(first_wins, pairs[..., 0], pairs[..., 1])
    idx = 2 * np.arange(n_pairs) + np.where(first_wins, 0, 1)
    if squeeze:
        return pooled[0], idx[0]
    return pooled, idx


def maxpool_backward(idx: np.ndarray, grad_out: np.ndarray, input_len: int) -> np.ndarray:
    """Scatter pooled gradients back to the argmax positions."""
    ib = idx[None] if idx.ndim == 2 else idx
    gb = grad_out[None] if grad_out.ndim == 2 else grad_out
    if ib.shape != gb.shape:
        raise ValueError("idx and grad_out shapes must match")
    if ib.size and (ib.min() < 0 or ib.max() >= input_len):
        raise ValueError(f"pool index out of range for input length {input_len}")
    grad_x = np.zeros((ib.shape[0], ib.shape[1], input_len))
    np.put_along_axis(grad_x, ib, gb, axis=2)
    return grad_x[0] if idx.ndim == 2 else grad_x


def dense_forward(x: np.ndarray, weights: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """x (B, n_in) @ weights (n_out, n_in).T + bias (n_out,)."""
    return x @ weights.T + bias


def dense_backward(
    x: np.ndarray, weights: np.ndarray, grad_out: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    grad_w = grad_out.T @ x
    grad_b = grad_out.sum(axis=0)
    grad_x = grad_out @ weights
    return grad_x, grad_w, grad_b


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_backward(x: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
    # Subgradient 0 at exactly 0.
    return grad_out * (x > 0)


def softmax_xent(logits: np.ndarray, classes: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Row-wise softmax + cross-entropy.

    Returns (probs, losses, grad_logits) where grad_logits is the gradient
    of the *per-row* loss (probs minus one-hot), not yet averaged.
    """
    lb = np.atleast_2d(logits)
    cb = np.atleast_1d(classes)
    if not np.isfinite(lb).all():
        raise ValueError("non-finite logits")
    if cb.shape != (lb.shape[0],):
        raise ValueError("one class index per logit row required")
    if cb.size and (cb.min() < 0 or cb.max() >= lb.shape[1]):
        raise ValueError("class index out of range")
    shifted = lb - lb.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    sum_exp = exp.sum(axis=1, keepdims=True)
    probs = exp / sum_exp
    rows = np.arange(lb.shape[0])
    # log-space loss: stays finite even when the true class's probability
    # underflows to zero
    losses = np.log(sum_exp[:, 0]) - shifted[rows, cb]
    grads = probs.copy()
    grads[rows, cb] -= 1.0
    if logits.ndim == 1:
        return probs[0], losses[0], grads[0]
    return probs, losses, grads


def dropout(
    x: np.ndarray, rate: float, training: bool, rng: np.random.Generator | None = None
) -> tuple[np.ndarray, np.ndarray | None]:
    """Inverted dropout: survivors are scaled by 1/(1-rate) at train time so
    evaluation is a bit-identical passthrough. Returns (output, mask); the
    mask is reused by the backward pass and None outside training."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x, None
    if rng is None:
        raise ValueError("training-mode dropout needs an rng")
    mask = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return x * mask, mask


def dropout_backward(mask: np.ndarray | None, grad_out: np.ndarray) -> np.ndarray:
    return grad_out if mask is None else grad_out * mask


@dataclass
class AdamState:
    """First/second moment accumulators, one pair per parameter tensor."""

    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def init_adam(
    params: list[np.ndarray],
    lr: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> AdamState:
    return AdamState(
        m=[np.zeros_like(p) for p in params],
        v=[np.zeros_like(p) for p in params],
        lr=lr,
        beta1=beta1,
        beta2=beta2,
        eps=eps,
    )


def adam_step(state: AdamState, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
    """One bias-corrected Adam update, in place. The epsilon sits outside the
    square root: p -= lr * m_hat / (sqrt(v_hat) + eps)."""
    if len(params) != len(state.m) or len(grads) != len(state.m):
        raise ValueError("params/grads count does not match the Adam state")
    for g in grads:
        if not np.isfinite(g).all():
            raise ValueError("non-finite gradient")
    state.t += 1
    b1t = 1.0 - state.beta1**state.t
    b2t = 1.0 - state.beta2**state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= state.lr * (m / b1t) / (np.sqrt(v / b2t) + state.eps)
