"""Per-channel normalization, sliding-window extraction and fold assignment."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import SAMPLE_RATE_HZ, ActivitySegment, LabeledSignal, N_CHANNELS


@dataclass
class ChannelStats:
    mean: np.ndarray  # (18,)
    std: np.ndarray  # (18,)


def compute_stats(signals: list[LabeledSignal]) -> ChannelStats:
    """Population mean/std per channel over the concatenation of all signals.

    A constant channel would divide by zero downstream, so it is rejected
    here rather than silently producing infinities.
    """
    if not signals:
        raise ValueError("no signals to compute stats over")
    data = np.concatenate([s.channels for s in signals], axis=1)
    if data.shape[1] < 2:
        raise ValueError("need at least 2 timesteps to compute stats")
    mean = data.mean(axis=1)
    std = data.std(axis=1)
    flat = np.flatnonzero(std == 0.0)
    if flat.size:
        raise ValueError(f"channel {flat[0]} is constant; cannot normalize")
    return ChannelStats(mean=mean, std=std)


def apply_zscore(signals: list[LabeledSignal], stats: ChannelStats) -> list[LabeledSignal]:
    """Standardize each channel in place-free fashion: (x - mean) / std."""
    out = []
    for sig in signals:
        z = (sig.channels - stats.mean[:, None]) / stats.std[:, None]
        out.append(LabeledSignal(sig.subject_id, z, sig.labels.copy(), sig.sample_rate_hz))
    return out


@dataclass(frozen=True)
class WindowSpec:
    """Window geometry: duration in seconds, 75% overlap.

    ``window_len`` is the duration at 100 Hz rounded to samples and
    ``stride`` is a quarter window, floored, never below one sample.
    """

    window_sec: float
    window_len: int = field(init=False)
    stride: int = field(init=False)

    def __post_init__(self) -> None:
        w = int(round(self.window_sec * SAMPLE_RATE_HZ))
        if w < 2:
            raise ValueError(
                f"window of {self.window_sec} s is {w} samples at {SAMPLE_RATE_HZ} Hz; need >= 2"
            )
        object.__setattr__(self, "window_len", w)
        object.__setattr__(self, "stride", max(1, w // 4))

    @property
    def overlap(self) -> int:
        return self.window_len - self.stride


@dataclass
class Sample:
    """One training example: a (window_len, 18) slice and its class."""

    window: np.ndarray
    class_index: int
    subject_id: int
    origin: tuple[int, int]  # (segment_id, start offset)


def segment(segments: list[ActivitySegment], spec: WindowSpec) -> list[Sample]:
    """Slide the window over each segment; runs shorter than one window
    contribute nothing."""
    w, stride = spec.window_len, spec.stride
    samples: list[Sample] = []
    for seg in segments:
        length = seg.channels.shape[1]
        for start in range(0, length - w + 1, stride):
            samples.append(
                Sample(
                    window=np.ascontiguousarray(seg.channels[:, start : start + w].T),
                    class_index=seg.class_index,
                    subject_id=seg.subject_id,
                    origin=(seg.segment_id, start),
                )
            )
    return samples


@dataclass
class FoldPlan:
    k: int
    assignment: np.ndarray  # (n_samples,) fold index per sample
    seed: int

    def train_test(self, fold: int) -> tuple[np.ndarray, np.ndarray]:
        if not 0 <= fold < self.k:
            raise ValueError(f"fold {fold} out of range for k={self.k}")
        test = np.flatnonzero(self.assignment == fold)
        train = np.flatnonzero(self.assignment != fold)
        return train, test


def make_folds(samples: list[Sample], k: int, seed: int) -> FoldPlan:
    """Stratified k-fold assignment: shuffle each class, deal round-robin.

    Every class must have at least k windows; per-class fold counts then
    differ by at most one.
    """
    if k < 2:
        raise ValueError(f"need k >= 2 folds, got {k}")
    if not samples:
        raise ValueError("no samples to fold")
    labels = np.array([s.class_index for s in samples])
    rng = np.random.default_rng(seed)
    assignment = np.empty(len(samples), dtype=np.int64)
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        if idx.size < k:
            raise ValueError(
                f"class {cls} has only {idx.size} windows; need at least {k} for {k} folds"
            )
        perm = rng.permutation(idx)
        assignment[perm] = np.arange(perm.size) % k
    return FoldPlan(k=k, assignment=assignment, seed=seed)
