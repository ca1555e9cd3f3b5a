"""Command-line front end.

Subcommands: ``ingest`` (protocol files -> dataset cache), ``synth``
(seeded synthetic cache), ``train`` (single model), ``sweep``
(cross-validated window-duration sweep) and ``report`` (regenerate CSV/SVG
from an archived sweep). Exit codes: 0 success, 1 missing data or a runtime
failure, 2 bad usage. Diagnostics go to stderr; stdout carries results only.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import dataset, experiment, report
from .model import TrainConfig, save_model

ENV_DATA_DIR = "HARWIN_DATA_DIR"


class UsageError(Exception):
    """Bad arguments detected after argparse (exit code 2)."""


def _progress(msg: str) -> None:
    print(msg, file=sys.stderr)


def _parse_floats(text: str, flag: str) -> list[float]:
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        try:
            out.append(float(tok))
        except ValueError:
            raise UsageError(f"{flag}: {tok!r} is not a number") from None
    if not out:
        raise UsageError(f"{flag}: no values given")
    return out


def _parse_ints(text: str, flag: str) -> list[int]:
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        try:
            out.append(int(tok))
        except ValueError:
            raise UsageError(f"{flag}: {tok!r} is not an integer") from None
    if not out:
        raise UsageError(f"{flag}: no values given")
    return out


def _load_signals(args: argparse.Namespace) -> list[dataset.LabeledSignal]:
    """Cache file wins; otherwise a data directory (flag or environment)."""
    if getattr(args, "cache", None):
        _progress(f"loading cache {args.cache}")
        return dataset.load_signals(args.cache)
    data_dir = getattr(args, "data_dir", None) or os.environ.get(ENV_DATA_DIR)
    if not data_dir:
        raise FileNotFoundError(
            f"no input: pass --cache or --data-dir (or set {ENV_DATA_DIR})"
        )
    subjects = _parse_ints(args.subjects, "--subjects") if getattr(args, "subjects", None) else None
    _progress(f"ingesting protocol files from {data_dir}")
    return dataset.ingest_directory(data_dir, subjects)


def _train_config(args: argparse.Namespace) -> TrainConfig:
    return TrainConfig(
        batch_size=args.batch_size,
        max_epochs=args.max_epochs,
        patience=args.patience,
        learning_rate=args.learning_rate,
        seed=args.seed,
    )


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--max-epochs", type=int, default=3000)
    p.add_argument("--patience", type=int, default=100)
    p.add_argument("--learning-rate", type=float, default=1e-3)


def _add_input_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--cache", help="dataset cache file produced by ingest/synth")
    p.add_argument("--data-dir", help=f"directory of subjectNNN.dat files (default ${ENV_DATA_DIR})")
    p.add_argument("--subjects", help="comma-separated subject numbers, e.g. 101,102")


def cmd_ingest(args: argparse.Namespace) -> int:
    data_dir = args.data_dir or os.environ.get(ENV_DATA_DIR)
    if not data_dir:
        raise FileNotFoundError(f"no input: pass --data-dir or set {ENV_DATA_DIR}")
    subjects = _parse_ints(args.subjects, "--subjects") if args.subjects else None
    _progress(f"ingesting protocol files from {data_dir}")
    signals = dataset.ingest_directory(data_dir, subjects)
    dataset.save_signals(signals, args.out)
    total = sum(s.n_timesteps for s in signals)
    print(f"wrote {args.out}: {len(signals)} subject(s), {total} timesteps")
    print(f"fingerprint {dataset.dataset_fingerprint(signals)}")
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    if args.samples_per_class < 1:
        raise UsageError("--samples-per-class must be >= 1")
    if args.segment_len < 2:
        raise UsageError("--segment-len must be >= 2")
    sig = dataset.generate_synthetic(args.seed, args.samples_per_class, args.segment_len)
    dataset.save_signals([sig], args.out)
    print(f"wrote {args.out}: 1 signal, {sig.n_timesteps} timesteps")
    print(f"fingerprint {dataset.dataset_fingerprint([sig])}")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    signals = _load_signals(args)
    kernels = None
    if args.kernels:
        pair = _parse_ints(args.kernels, "--kernels")
        if len(pair) != 2:
            raise UsageError("--kernels needs exactly two sizes, e.g. 7,11")
        kernels = (pair[0], pair[1])
    cfg = _train_config(args)
    _progress(f"training at window {args.window:g} s (seed {args.seed})")
    result = experiment.train_single(
        signals, args.window, cfg, args.seed, kernels=kernels
    )
    if args.model_out:
        save_model(result.model, args.model_out)
        _progress(f"saved model to {args.model_out}")
    if args.metrics_json:
        doc = {
            "window_sec": args.window,
            "accuracy": result.accuracy,
            "loss": result.loss,
            "epochs_to_best": result.epochs_to_best,
            "history": [
                {"train_loss": h.train_loss, "stop_loss": h.stop_loss}
                for h in result.history
            ],
        }
        Path(args.metrics_json).write_text(json.dumps(doc, indent=2) + "\n")
    print(
        f"window {args.window:g} s: accuracy {result.accuracy * 100:.2f}% "
        f"loss {result.loss:.4f} best epoch {result.epochs_to_best}"
    )
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    if args.folds < 2:
        raise UsageError("--folds must be >= 2")
    windows = _parse_floats(args.windows, "--windows")
    if len(set(windows)) != len(windows):
        raise UsageError("--windows contains duplicates")
    signals = _load_signals(args)
    cfg = _train_config(args)
    rep = experiment.run_sweep(
        signals,
        windows,
        cfg,
        args.seed,
        folds=args.folds,
        honest_split=args.honest_split,
        per_fold_stats=args.per_fold_stats,
        progress=_progress,
    )
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report.save_report(rep, out_dir / "report.json")
    report.render_all(rep, out_dir)
    _progress(f"wrote {out_dir}/report.json, report.csv and box plots")
    sys.stdout.write(report.format_report_csv(rep))
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    rep = report.load_report(args.report)
    report.render_all(rep, args.out_dir)
    _progress(f"regenerated outputs in {args.out_dir}")
    sys.stdout.write(report.format_report_csv(rep))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="harwin",
        description="Window-duration benchmarking for IMU activity recognition",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse protocol files into a dataset cache")
    p.add_argument("--data-dir", help=f"directory of subjectNNN.dat files (default ${ENV_DATA_DIR})")
    p.add_argument("--subjects", help="comma-separated subject numbers")
    p.add_argument("--out", required=True, help="cache file to write")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("synth", help="generate a deterministic synthetic cache")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--samples-per-class", type=int, default=10)
    p.add_argument("--segment-len", type=int, default=500)
    p.add_argument("--out", required=True, help="cache file to write")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train one model at a fixed window duration")
    _add_input_flags(p)
    p.add_argument("--window", type=float, required=True, help="window duration in seconds")
    p.add_argument("--kernels", help="override conv kernel sizes, e.g. 7,11")
    _add_train_flags(p)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--model-out", help="checkpoint file to write")
    p.add_argument("--metrics-json", help="metrics/history JSON to write")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="cross-validated sweep over window durations")
    _add_input_flags(p)
    p.add_argument("--windows", default="0.1,0.25,0.5,1,2,4", help="comma-separated durations (s)")
    p.add_argument("--folds", type=int, default=8)
    p.add_argument("--honest-split", action="store_true", help="stop on a split of the training folds, not the test fold")
    p.add_argument("--per-fold-stats", action="store_true", help="normalize with training-fold statistics per fold")
    _add_train_flags(p)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out-dir", default="sweep_out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="regenerate CSV/SVG outputs from report.json")
    p.add_argument("--report", required=True, help="report.json from a sweep run")
    p.add_argument("--out-dir", default="sweep_out")
    p.set_defaults(func=cmd_report)

    return parser


def cli(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except UsageError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli())


if __name__ == "__main__":
    main()
