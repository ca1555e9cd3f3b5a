"""Two-conv-layer 1-D CNN: shape planning, init, forward/backward, training.

The fixed column is conv(16) -> ReLU -> pool -> conv(32) -> ReLU -> pool ->
dense 32 -> ReLU -> dropout -> dense 24 -> ReLU -> dropout -> dense 5 ->
softmax. Short windows degrade gracefully: a pool stage is skipped when its
output would starve the next layer (first pool) or be empty (second pool).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .layers import (
    adam_step,
    conv1d_backward,
    conv1d_forward,
    conv_out_len,
    dense_backward,
    dense_forward,
    dropout,
    dropout_backward,
    init_adam,
    maxpool_backward,
    maxpool_forward,
    relu,
    relu_backward,
    softmax_xent,
)

EVAL_CHUNK = 512


@dataclass(frozen=True)
class ModelSpec:
    """Architecture hyperparameters; shapes are derived per window length."""

    in_channels: int = 18
    conv_filters: tuple[int, int] = (16, 32)
    kernels: tuple[int, int] = (7, 11)
    pool_width: int = 2
    dense_sizes: tuple[int, int] = (32, 24)
    n_classes: int = 5
    dropout_rate: float = 0.3

    def __post_init__(self) -> None:
        if self.pool_width != 2:
            raise ValueError(f"only pool width 2 is supported, got {self.pool_width}")
        for name in ("in_channels", "n_classes"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        for name in ("conv_filters", "kernels", "dense_sizes"):
            if any(v < 1 for v in getattr(self, name)):
                raise ValueError(f"{name} entries must be positive")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")


@dataclass(frozen=True)
class ShapePlan:
    """Resolved sequence lengths for one (spec, window length) pairing."""

    window_len: int
    conv1_out: int
    pool1_out: int
    conv2_out: int
    pool2_out: int
    flatten: int
    pool1_applied: bool
    pool2_applied: bool


def plan_shapes(spec: ModelSpec, window_len: int) -> ShapePlan:
    """Work out every intermediate length, deciding which pools to keep.

    The first pool is applied only when the halved sequence still covers the
    second kernel; the second only when there are at least two positions to
    pool. A window shorter than the first kernel has no valid plan.
    """
    k1, k2 = spec.kernels
    if window_len < k1:
        raise ValueError(
            f"architecture invalid for window of {window_len} samples: "
            f"first kernel {k1} does not fit"
        )
    conv1 = conv_out_len(window_len, k1)
    pool1_applied = conv1 // 2 >= k2
    pool1 = conv1 // 2 if pool1_applied else conv1
    conv2 = conv_out_len(pool1, k2) if pool1 >= k2 else 0
    if conv2 < 1:
        raise ValueError(
            f"architecture invalid for window of {window_len} samples: "
            f"second kernel {k2} does not fit in {pool1}"
        )
    pool2_applied = conv2 >= 2
    pool2 = conv2 // 2 if pool2_applied else conv2
    return ShapePlan(
        window_len=window_len,
        conv1_out=conv1,
        pool1_out=pool1,
        conv2_out=conv2,
        pool2_out=pool2,
        flatten=spec.conv_filters[1] * pool2,
        pool1_applied=pool1_applied,
        pool2_applied=pool2_applied,
    )


@dataclass
class ModelParams:
    """All trainable tensors plus the spec/plan they were built for."""

    spec: ModelSpec
    plan: ShapePlan
    conv1_w: np.ndarray
    conv1_b: np.ndarray
    conv2_w: np.ndarray
    conv2_b: np.ndarray
    dense1_w: np.ndarray
    dense1_b: np.ndarray
    dense2_w: np.ndarray
    dense2_b: np.ndarray
    out_w: np.ndarray
    out_b: np.ndarray

    def tensors(self) -> list[np.ndarray]:
        """Parameter tensors in a fixed order, shared by Adam, gradient
        stacking and the checkpoint format."""
        return [
            self.conv1_w,
            self.conv1_b,
            self.conv2_w,
            self.conv2_b,
            self.dense1_w,
            self.dense1_b,
            self.dense2_w,
            self.dense2_b,
            self.out_w,
            self.out_b,
        ]

    def with_tensors(self, tensors: list[np.ndarray]) -> "ModelParams":
        return ModelParams(self.spec, self.plan, *tensors)


def _he_uniform(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    bound = np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape)


def build_model(spec: ModelSpec, window_len: int, seed: int) -> ModelParams:
    """He-uniform weights (bound sqrt(6/fan_in)), zero biases, seeded rng.

    Weights are drawn in declaration order so a seed pins the full init.
    """
    plan = plan_shapes(spec, window_len)
    f1, f2 = spec.conv_filters
    k1, k2 = spec.kernels
    d1, d2 = spec.dense_sizes
    rng = np.random.default_rng(seed)
    return ModelParams(
        spec=spec,
        plan=plan,
        conv1_w=_he_uniform(rng, (f1, spec.in_channels, k1), spec.in_channels * k1),
        conv1_b=np.zeros(f1),
        conv2_w=_he_uniform(rng, (f2, f1, k2), f1 * k2),
        conv2_b=np.zeros(f2),
        dense1_w=_he_uniform(rng, (d1, plan.flatten), plan.flatten),
        dense1_b=np.zeros(d1),
        dense2_w=_he_uniform(rng, (d2, d1), d1),
        dense2_b=np.zeros(d2),
        out_w=_he_uniform(rng, (spec.n_classes, d2), d2),
        out_b=np.zeros(spec.n_classes),
    )


@dataclass
class ForwardCache:
    """Intermediates kept from a training forward pass for backprop."""

    x: np.ndarray
    a1: np.ndarray
    p1: np.ndarray
    idx1: np.ndarray | None
    a2: np.ndarray
    p2: np.ndarray
    idx2: np.ndarray | None
    flat: np.ndarray
    z1: np.ndarray
    h1d: np.ndarray
    mask1: np.ndarray | None
    z2: np.ndarray
    h2d: np.ndarray
    mask2: np.ndarray | None


def forward(
    model: ModelParams,
    windows: np.ndarray,
    training: bool = False,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, ForwardCache]:
    """Run a (B, window_len, 18) batch through the net; returns logits and
    the cache the backward pass needs. windows are time-major as produced by
    the windowing stage and transposed to channel-major here."""
    plan = model.plan
    if windows.ndim != 3 or windows.shape[1] != plan.window_len or windows.shape[2] != model.spec.in_channels:
        raise ValueError(
            f"expected windows of shape (B, {plan.window_len}, {model.spec.in_channels}), "
            f"got {windows.shape}"
        )
    x = np.ascontiguousarray(windows.transpose(0, 2, 1))

    a1 = conv1d_forward(x, model.conv1_w, model.conv1_b)
    r1 = relu(a1)
    if plan.pool1_applied:
        p1, idx1 = maxpool_forward(r1)
    else:
        p1, idx1 = r1, None

    a2 = conv1d_forward(p1, model.conv2_w, model.conv2_b)
    r2 = relu(a2)
    if plan.pool2_applied:
        p2, idx2 = maxpool_forward(r2)
    else:
        p2, idx2 = r2, None

    flat = p2.reshape(p2.shape[0], plan.flatten)

    z1 = dense_forward(flat, model.dense1_w, model.dense1_b)
    h1 = relu(z1)
    h1d, mask1 = dropout(h1, model.spec.dropout_rate, training, rng)

    z2 = dense_forward(h1d, model.dense2_w, model.dense2_b)
    h2 = relu(z2)
    h2d, mask2 = dropout(h2, model.spec.dropout_rate, training, rng)

    logits = dense_forward(h2d, model.out_w, model.out_b)
    cache = ForwardCache(x, a1, p1, idx1, a2, p2, idx2, flat, z1, h1d, mask1, z2, h2d, mask2)
    return logits, cache


def backward(model: ModelParams, cache: ForwardCache, grad_logits: np.ndarray) -> list[np.ndarray]:
    """Backprop grad_logits through the cached pass; gradients come back in
    tensors() order."""
    plan = model.plan

    g_h2d, g_out_w, g_out_b = dense_backward(cache.h2d, model.out_w, grad_logits)
    g_h2 = dropout_backward(cache.mask2, g_h2d)
    g_z2 = relu_backward(cache.z2, g_h2)

    g_h1d, g_dense2_w, g_dense2_b = dense_backward(cache.h1d, model.dense2_w, g_z2)
    g_h1 = dropout_backward(cache.mask1, g_h1d)
    g_z1 = relu_backward(cache.z1, g_h1)

    g_flat, g_dense1_w, g_dense1_b = dense_backward(cache.flat, model.dense1_w, g_z1)
    g_p2 = g_flat.reshape(cache.p2.shape)

    if plan.pool2_applied:
        g_r2 = maxpool_backward(cache.idx2, g_p2, plan.conv2_out)
    else:
        g_r2 = g_p2
    g_a2 = relu_backward(cache.a2, g_r2)
    g_p1, g_conv2_w, g_conv2_b = conv1d_backward(cache.p1, model.conv2_w, g_a2)

    if plan.pool1_applied:
        g_r1 = maxpool_backward(cache.idx1, g_p1, plan.conv1_out)
    else:
        g_r1 = g_p1
    g_a1 = relu_backward(cache.a1, g_r1)
    _, g_conv1_w, g_conv1_b = conv1d_backward(cache.x, model.conv1_w, g_a1)

    return [
        g_conv1_w,
        g_conv1_b,
        g_conv2_w,
        g_conv2_b,
        g_dense1_w,
        g_dense1_b,
        g_dense2_w,
        g_dense2_b,
        g_out_w,
        g_out_b,
    ]


def loss_and_grads(
    model: ModelParams,
    windows: np.ndarray,
    classes: np.ndarray,
    training: bool = False,
    rng: np.random.Generator | None = None,
) -> tuple[float, list[np.ndarray]]:
    """Mean cross-entropy over the batch and its parameter gradients."""
    logits, cache = forward(model, windows, training=training, rng=rng)
    _, losses, grad_logits = softmax_xent(logits, classes)
    grad_logits = grad_logits / windows.shape[0]
    return float(losses.mean()), backward(model, cache, grad_logits)


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 128
    max_epochs: int = 3000
    patience: int = 100
    learning_rate: float = 1e-3
    seed: int = 42

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.max_epochs < 1:
            raise ValueError(f"max_epochs must be >= 1, got {self.max_epochs}")
        if self.patience < 0:
            raise ValueError(f"patience must be >= 0, got {self.patience}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")


@dataclass
class EpochStats:
    train_loss: float
    stop_loss: float


def stack_windows(samples: list) -> np.ndarray:
    return np.stack([s.window for s in samples])


def stack_labels(samples: list) -> np.ndarray:
    return np.array([s.class_index for s in samples], dtype=np.int64)


def _eval_arrays(model: ModelParams, windows: np.ndarray, classes: np.ndarray) -> tuple[float, float]:
    """Accuracy and mean loss in eval mode, chunked to bound memory.

    Argmax ties resolve to the lowest class index (np.argmax behaviour).
    """
    n = windows.shape[0]
    correct = 0
    loss_sum = 0.0
    for lo in range(0, n, EVAL_CHUNK):
        wb = windows[lo : lo + EVAL_CHUNK]
        cb = classes[lo : lo + EVAL_CHUNK]
        logits, _ = forward(model, wb)
        _, losses, _ = softmax_xent(logits, cb)
        correct += int((logits.argmax(axis=1) == cb).sum())
        loss_sum += float(losses.sum())
    return correct / n, loss_sum / n


def evaluate(model: ModelParams, samples: list) -> tuple[float, float]:
    """(accuracy, mean cross-entropy) over a sample list, eval mode."""
    if not samples:
        raise ValueError("no samples to evaluate")
    return _eval_arrays(model, stack_windows(samples), stack_labels(samples))


def train(
    model: ModelParams,
    train_samples: list,
    stop_samples: list,
    cfg: TrainConfig,
) -> tuple[ModelParams, int, list[EpochStats]]:
    """Minibatch Adam with early stopping on the stop set's loss.

    One shuffled pass per epoch, one Adam step per minibatch. Training stops
    when the stop loss has not improved for ``patience`` epochs or the epoch
    budget runs out, and the parameters from the best epoch are returned
    along with that epoch's 1-based index and the per-epoch history.
    A non-finite loss or gradient aborts with a RuntimeError naming the
    epoch.
    """
    if not train_samples:
        raise ValueError("no training samples")
    if not stop_samples:
        raise ValueError("no early-stopping samples")
    windows = stack_windows(train_samples)
    classes = stack_labels(train_samples)
    stop_windows = stack_windows(stop_samples)
    stop_classes = stack_labels(stop_samples)

    rng = np.random.default_rng(cfg.seed)  # drives both shuffling and dropout
    params = model.tensors()
    adam = init_adam(params, lr=cfg.learning_rate)

    best_loss = np.inf
    best_epoch = 0
    best_tensors = [p.copy() for p in params]
    history: list[EpochStats] = []

    n = windows.shape[0]
    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(n)
        batch_losses = []
        for lo in range(0, n, cfg.batch_size):
            idx = order[lo : lo + cfg.batch_size]
            try:
                # overflow here is how divergence manifests; the isfinite
                # checks below turn it into a diagnostic instead of a warning
                with np.errstate(over="ignore", invalid="ignore"):
                    loss, grads = loss_and_grads(
                        model, windows[idx], classes[idx], training=True, rng=rng
                    )
                    if not np.isfinite(loss):
                        raise ValueError("non-finite loss")
                    adam_step(adam, params, grads)
            except ValueError as err:
                if "non-finite" in str(err):
                    raise RuntimeError(f"training diverged at epoch {epoch}") from err
                raise
            batch_losses.append(loss)
        _, stop_loss = _eval_arrays(model, stop_windows, stop_classes)
        history.append(EpochStats(train_loss=float(np.mean(batch_losses)), stop_loss=stop_loss))
        if stop_loss < best_loss:
            best_loss = stop_loss
            best_epoch = epoch
            best_tensors = [p.copy() for p in params]
        if epoch - best_epoch >= cfg.patience:
            break

    return model.with_tensors(best_tensors), best_epoch, history


# ---------------------------------------------------------------------------
# Checkpoints ("HARM1"): spec, shape plan and tensors, little-endian.
# ---------------------------------------------------------------------------

CKPT_MAGIC = b"HARM1"


def save_model(model: ModelParams, path: str | Path) -> None:
    spec, plan = model.spec, model.plan
    parts = [
        CKPT_MAGIC,
        struct.pack(
            "<9Id",
            spec.in_channels,
            *spec.conv_filters,
            *spec.kernels,
            spec.pool_width,
            *spec.dense_sizes,
            spec.n_classes,
            spec.dropout_rate,
        ),
        struct.pack(
            "<6I2B",
            plan.window_len,
            plan.conv1_out,
            plan.pool1_out,
            plan.conv2_out,
            plan.pool2_out,
            plan.flatten,
            plan.pool1_applied,
            plan.pool2_applied,
        ),
    ]
    for t in model.tensors():
        parts.append(np.ascontiguousarray(t, dtype="<f8").tobytes())
    Path(path).write_bytes(b"".join(parts))


def load_model(path: str | Path) -> ModelParams:
    blob = Path(path).read_bytes()
    if blob[: len(CKPT_MAGIC)] != CKPT_MAGIC:
        raise ValueError(f"{path}: not a model checkpoint (bad magic)")
    off = len(CKPT_MAGIC)

    def take(n: int) -> bytes:
        nonlocal off
        if off + n > len(blob):
            raise ValueError(f"{path}: truncated model checkpoint")
        chunk = blob[off : off + n]
        off += n
        return chunk

    vals = struct.unpack("<9Id", take(9 * 4 + 8))
    spec = ModelSpec(
        in_channels=vals[0],
        conv_filters=(vals[1], vals[2]),
        kernels=(vals[3], vals[4]),
        pool_width=vals[5],
        dense_sizes=(vals[6], vals[7]),
        n_classes=vals[8],
        dropout_rate=vals[9],
    )
    pv = struct.unpack("<6I2B", take(6 * 4 + 2))
    plan = ShapePlan(
        window_len=pv[0],
        conv1_out=pv[1],
        pool1_out=pv[2],
        conv2_out=pv[3],
        pool2_out=pv[4],
        flatten=pv[5],
        pool1_applied=bool(pv[6]),
        pool2_applied=bool(pv[7]),
    )
    f1, f2 = spec.conv_filters
    k1, k2 = spec.kernels
    d1, d2 = spec.dense_sizes
    shapes = [
        (f1, spec.in_channels, k1),
        (f1,),
        (f2, f1, k2),
        (f2,),
        (d1, plan.flatten),
        (d1,),
        (d2, d1),
        (d2,),
        (spec.n_classes, d2),
        (spec.n_classes,),
    ]
    tensors = []
    for shape in shapes:
        count = int(np.prod(shape))
        tensors.append(np.frombuffer(take(8 * count), dtype="<f8").reshape(shape).copy())
    if off != len(blob):
        raise ValueError(f"{path}: trailing bytes in model checkpoint")
    return ModelParams(spec, plan, *tensors)
