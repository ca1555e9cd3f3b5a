"""Cross-validated training and the window-duration sweep.

The sweep trains one model per (window duration, fold) pair and aggregates
per-duration accuracy/loss/epoch statistics. Kernel sizes follow the window:
short windows (<= 0.25 s) use (3, 5), everything longer (7, 11). Durations
whose geometry cannot host the architecture are reported as failed rows
rather than aborting the sweep.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .dataset import ActivitySet, DEFAULT_ACTIVITIES, LabeledSignal, collect_segments, dataset_fingerprint
from .model import ModelParams, ModelSpec, TrainConfig, build_model, evaluate, plan_shapes, train
from .preprocess import Sample, WindowSpec, apply_zscore, compute_stats, make_folds, segment

SHORT_WINDOW_SEC = 0.25
SHORT_KERNELS = (3, 5)
LONG_KERNELS = (7, 11)

DEFAULT_WINDOWS_SEC = (0.1, 0.25, 0.5, 1.0, 2.0, 4.0)


def select_kernels(window_sec: float) -> tuple[int, int]:
    """Conv kernel sizes as a function of window duration."""
    return SHORT_KERNELS if window_sec <= SHORT_WINDOW_SEC else LONG_KERNELS


@dataclass
class FoldResult:
    fold: int
    accuracy: float
    loss: float
    epochs_to_best: int


@dataclass
class SweepRow:
    """Aggregated cross-validation outcome for one window duration."""

    window_sec: float
    k1: int
    k2: int
    folds: list[FoldResult]
    failed: bool = False
    reason: str | None = None

    def _agg(self, attr: str) -> tuple[float, float]:
        vals = np.array([getattr(f, attr) for f in self.folds], dtype=np.float64)
        # sample std (ddof=1) across folds, matching how spread over repeated
        # trials is usually quoted
        return float(vals.mean()), float(vals.std(ddof=1)) if vals.size > 1 else 0.0

    @property
    def acc_mean(self) -> float:
        return self._agg("accuracy")[0]

    @property
    def acc_std(self) -> float:
        return self._agg("accuracy")[1]

    @property
    def loss_mean(self) -> float:
        return self._agg("loss")[0]

    @property
    def loss_std(self) -> float:
        return self._agg("loss")[1]

    @property
    def epochs_mean(self) -> float:
        return self._agg("epochs_to_best")[0]

    @property
    def epochs_std(self) -> float:
        return self._agg("epochs_to_best")[1]


@dataclass
class SweepReport:
    rows: list[SweepRow]
    seed: int
    dataset_fingerprint: str
    config: dict


def _window_level_stats(samples: list[Sample], idx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    data = np.concatenate([samples[i].window for i in idx], axis=0)  # (sum W, C)
    mean = data.mean(axis=0)
    std = data.std(axis=0)
    flat = np.flatnonzero(std == 0.0)
    if flat.size:
        raise ValueError(f"channel {flat[0]} is constant in the training folds")
    return mean, std


def _standardized(samples: list[Sample], idx: np.ndarray, mean: np.ndarray, std: np.ndarray) -> list[Sample]:
    return [
        replace(samples[i], window=(samples[i].window - mean) / std) for i in idx
    ]


def run_cv(
    samples: list[Sample],
    k: int,
    base_spec: ModelSpec,
    cfg: TrainConfig,
    seed: int,
    *,
    honest_split: bool = False,
    per_fold_stats: bool = False,
) -> list[FoldResult]:
    """Stratified k-fold: train on k-1 folds, test on the held-out fold.

    By default the held-out fold doubles as the early-stopping set — the
    optimistic protocol this reproduces. ``honest_split`` instead carves a
    tenth of the training pool (stratified) for stopping, so the test fold
    is never seen before the final evaluation. ``per_fold_stats`` normalizes
    with statistics of the training folds only instead of assuming globally
    standardized input.
    """
    plan = make_folds(samples, k, seed)
    window_len = samples[0].window.shape[0]
    results = []
    for fold in range(k):
        fold_seed = seed + fold
        train_idx, test_idx = plan.train_test(fold)
        if per_fold_stats:
            mean, std = _window_level_stats(samples, train_idx)
            train_pool = _standardized(samples, train_idx, mean, std)
            test_pool = _standardized(samples, test_idx, mean, std)
        else:
            train_pool = [samples[i] for i in train_idx]
            test_pool = [samples[i] for i in test_idx]
        if honest_split:
            inner = make_folds(train_pool, 10, fold_seed)
            fit_idx, stop_idx = inner.train_test(0)
            fit_pool = [train_pool[i] for i in fit_idx]
            stop_pool = [train_pool[i] for i in stop_idx]
        else:
            fit_pool, stop_pool = train_pool, test_pool
        net = build_model(base_spec, window_len, fold_seed)
        best, best_epoch, _ = train(net, fit_pool, stop_pool, replace(cfg, seed=fold_seed))
        accuracy, loss = evaluate(best, test_pool)
        results.append(FoldResult(fold=fold, accuracy=accuracy, loss=loss, epochs_to_best=best_epoch))
    return results


def run_sweep(
    signals: list[LabeledSignal],
    windows_sec: list[float],
    cfg: TrainConfig,
    seed: int,
    *,
    folds: int = 8,
    acts: ActivitySet = DEFAULT_ACTIVITIES,
    honest_split: bool = False,
    per_fold_stats: bool = False,
    progress=None,
) -> SweepReport:
    """Cross-validate one model per window duration over a shared dataset.

    Geometry or data-coverage problems for a single duration (kernel does
    not fit, too few windows per class) mark that row failed with the
    reason; anything else propagates.
    """
    if not windows_sec:
        raise ValueError("no window durations given")
    if len(set(windows_sec)) != len(windows_sec):
        raise ValueError("duplicate window durations")
    fingerprint = dataset_fingerprint(signals)
    if not per_fold_stats:
        signals = apply_zscore(signals, compute_stats(signals))
    segments = collect_segments(signals, acts)
    rows = []
    for w_sec in sorted(windows_sec):
        k1, k2 = select_kernels(w_sec)
        if progress is not None:
            progress(f"window {w_sec:g} s: kernels ({k1}, {k2})")
        try:
            spec = ModelSpec(kernels=(k1, k2))
            wspec = WindowSpec(w_sec)
            plan_shapes(spec, wspec.window_len)
            samples = segment(segments, wspec)
            fold_results = run_cv(
                samples,
                folds,
                spec,
                cfg,
                seed,
                honest_split=honest_split,
                per_fold_stats=per_fold_stats,
            )
        except ValueError as err:
            rows.append(
                SweepRow(window_sec=w_sec, k1=k1, k2=k2, folds=[], failed=True, reason=str(err))
            )
            continue
        rows.append(SweepRow(window_sec=w_sec, k1=k1, k2=k2, folds=fold_results))
    return SweepReport(
        rows=rows,
        seed=seed,
        dataset_fingerprint=fingerprint,
        config={
            "folds": folds,
            "batch_size": cfg.batch_size,
            "max_epochs": cfg.max_epochs,
            "patience": cfg.patience,
            "learning_rate": cfg.learning_rate,
            "honest_split": honest_split,
            "per_fold_stats": per_fold_stats,
        },
    )


@dataclass
class SingleRunResult:
    model: ModelParams
    accuracy: float
    loss: float
    epochs_to_best: int
    history: list


def train_single(
    signals: list[LabeledSignal],
    window_sec: float,
    cfg: TrainConfig,
    seed: int,
    *,
    acts: ActivitySet = DEFAULT_ACTIVITIES,
    kernels: tuple[int, int] | None = None,
) -> SingleRunResult:
    """One standardize/window/train run with a held-out fifth for stopping
    and evaluation. Used by the CLI's single-model path."""
    signals = apply_zscore(signals, compute_stats(signals))
    segments = collect_segments(signals, acts)
    wspec = WindowSpec(window_sec)
    spec = ModelSpec(kernels=kernels or select_kernels(window_sec))
    plan_shapes(spec, wspec.window_len)
    samples = segment(segments, wspec)
    plan = make_folds(samples, 5, seed)
    train_idx, holdout_idx = plan.train_test(0)
    fit_pool = [samples[i] for i in train_idx]
    holdout = [samples[i] for i in holdout_idx]
    net = build_model(spec, wspec.window_len, seed)
    best, best_epoch, history = train(net, fit_pool, holdout, replace(cfg, seed=seed))
    accuracy, loss = evaluate(best, holdout)
    return SingleRunResult(
        model=best, accuracy=accuracy, loss=loss, epochs_to_best=best_epoch, history=history
    )
