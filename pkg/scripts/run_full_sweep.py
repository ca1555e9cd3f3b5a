#!/usr/bin/env python3
"""Full-scale sweep: all available subjects, the complete duration set
(0.1-4 s), default hyperparameters (3000-epoch cap, patience 100). This is
the headline experiment; expect many hours of single-core CPU time.

The expected outcome is an interior optimum — peak mean accuracy at a
duration strictly between 0.1 s and 4 s, around half a second — rather than
monotone gains from ever-longer windows.
"""

import argparse
import os
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from harwin.dataset import ingest_directory
from harwin.experiment import DEFAULT_WINDOWS_SEC, run_sweep
from harwin.model import TrainConfig
from harwin.report import format_report_csv, render_all, save_report


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--data-dir", default=os.environ.get("HARWIN_DATA_DIR"))
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--folds", type=int, default=8)
    ap.add_argument("--out-dir", default="full_sweep_out")
    ap.add_argument(
        "--honest-split",
        action="store_true",
        help="early-stop on a carve-out of the training folds instead of the test fold",
    )
    ap.add_argument(
        "--per-fold-stats",
        action="store_true",
        help="normalize each fold with training-fold statistics only",
    )
    args = ap.parse_args()
    if not args.data_dir:
        ap.error("--data-dir or HARWIN_DATA_DIR is required")

    print("ingesting all subjects", file=sys.stderr)
    signals = ingest_directory(args.data_dir)
    print(f"{len(signals)} subjects, {sum(s.n_timesteps for s in signals)} timesteps", file=sys.stderr)

    cfg = TrainConfig(seed=args.seed)  # full defaults
    t0 = time.monotonic()
    report = run_sweep(
        signals,
        list(DEFAULT_WINDOWS_SEC),
        cfg,
        args.seed,
        folds=args.folds,
        honest_split=args.honest_split,
        per_fold_stats=args.per_fold_stats,
        progress=lambda msg: print(msg, file=sys.stderr),
    )
    print(f"sweep finished in {time.monotonic() - t0:.0f}s", file=sys.stderr)

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_report(report, out / "report.json")
    render_all(report, out)
    sys.stdout.write(format_report_csv(report))

    ok = [r for r in report.rows if not r.failed]
    if ok:
        best = max(ok, key=lambda r: r.acc_mean)
        interior = 0.1 < best.window_sec < 4.0
        print(
            f"best duration: {best.window_sec:g}s at {best.acc_mean * 100:.2f}% "
            f"({'interior optimum' if interior else 'edge of the sweep!'})",
            file=sys.stderr,
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
