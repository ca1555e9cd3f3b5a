#!/usr/bin/env python3
"""Window-duration sweep on the synthetic generator — no dataset download
needed. Finishes in some minutes on one core; useful as a pipeline shakedown
and a determinism reference (rerunning with the same seed must reproduce
report.csv byte for byte).
"""

import argparse
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from harwin.dataset import generate_synthetic
from harwin.experiment import DEFAULT_WINDOWS_SEC, run_sweep
from harwin.model import TrainConfig
from harwin.report import format_report_csv, render_all, save_report


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--samples-per-class", type=int, default=4)
    ap.add_argument("--segment-len", type=int, default=840)
    ap.add_argument("--max-epochs", type=int, default=60)
    ap.add_argument("--patience", type=int, default=20)
    ap.add_argument("--folds", type=int, default=8)
    ap.add_argument("--out-dir", default="synthetic_sweep_out")
    args = ap.parse_args()

    sig = generate_synthetic(args.seed, args.samples_per_class, args.segment_len)
    print(f"synthetic signal: {sig.n_timesteps} timesteps", file=sys.stderr)

    cfg = TrainConfig(max_epochs=args.max_epochs, patience=args.patience, seed=args.seed)
    t0 = time.monotonic()
    report = run_sweep(
        [sig],
        list(DEFAULT_WINDOWS_SEC),
        cfg,
        args.seed,
        folds=args.folds,
        progress=lambda msg: print(msg, file=sys.stderr),
    )
    print(f"sweep finished in {time.monotonic() - t0:.0f}s", file=sys.stderr)

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_report(report, out / "report.json")
    render_all(report, out)
    sys.stdout.write(format_report_csv(report))
    return 0


if __name__ == "__main__":
    sys.exit(main())
