"""Sweep outputs: summary CSV, per-duration box plots (SVG), JSON archive.

Every writer here is a pure function of the report object — no timestamps,
no environment — so rerunning a seeded sweep regenerates byte-identical
files.
"""

from __future__ import annotations

import json
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .experiment import FoldResult, SweepReport, SweepRow

CSV_HEADER = "window_sec,k1,k2,acc_mean,acc_std,loss_mean,loss_std,epochs_mean,epochs_std"


def _format_row(row: SweepRow) -> str:
    head = f"{row.window_sec:g},{row.k1},{row.k2}"
    if row.failed:
        return head + ",NA,NA,NA,NA,NA,NA"
    return head + (
        f",{row.acc_mean * 100:.2f},{row.acc_std * 100:.2f}"
        f",{row.loss_mean:.3f},{row.loss_std:.3f}"
        f",{row.epochs_mean:.1f},{row.epochs_std:.1f}"
    )


def format_report_csv(report: SweepReport) -> str:
    """Accuracy in percent (2 dp), loss to 3 dp, epochs to 1 dp; failed
    durations keep their geometry columns and carry NA elsewhere."""
    lines = [CSV_HEADER]
    lines.extend(_format_row(row) for row in report.rows)
    return "\n".join(lines) + "\n"


def write_report_csv(report: SweepReport, path: str | Path) -> None:
    Path(path).write_text(format_report_csv(report))


# ---------------------------------------------------------------------------
# Box plots
# ---------------------------------------------------------------------------

_W, _H = 640, 360
_LEFT, _RIGHT, _TOP, _BOTTOM = 70, 20, 24, 52
_BOX_W = 34


def _box_stats(values: list[float]) -> tuple[float, float, float, float, float]:
    """(lo, q1, median, q3, hi): linearly interpolated quartiles, whiskers at
    the extremes."""
    arr = np.asarray(values, dtype=np.float64)
    q1, med, q3 = np.percentile(arr, [25, 50, 75])
    return float(arr.min()), float(q1), float(med), float(q3), float(arr.max())


def render_boxplot_svg(groups: list[tuple[float, list[float]]], metric: str) -> str:
    """One box-and-whisker per (window duration, values) group.

    Groups are drawn in the given order along x. Each group needs at least
    two values (a box of one point has no spread to show).
    """
    if not groups:
        raise ValueError("no groups to plot")
    for label, values in groups:
        if len(values) < 2:
            raise ValueError(f"group {label:g} has {len(values)} value(s); need >= 2")

    stats = [(label, _box_stats(values)) for label, values in groups]
    lo = min(s[1][0] for s in stats)
    hi = max(s[1][4] for s in stats)
    if hi == lo:
        lo, hi = lo - 1.0, hi + 1.0
    pad = 0.05 * (hi - lo)
    lo, hi = lo - pad, hi + pad

    plot_w = _W - _LEFT - _RIGHT
    plot_h = _H - _TOP - _BOTTOM

    def ty(v: float) -> float:
        return _TOP + plot_h * (hi - v) / (hi - lo)

    def fmt(v: float) -> str:
        return f"{v:.2f}".rstrip("0").rstrip(".")

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<rect x="{_LEFT}" y="{_TOP}" width="{plot_w}" height="{plot_h}" '
        f'fill="none" stroke="#333"/>',
    ]
    for tick in np.linspace(lo, hi, 5):
        y = ty(float(tick))
        out.append(
            f'<line x1="{_LEFT - 4}" y1="{fmt(y)}" x2="{_LEFT}" y2="{fmt(y)}" stroke="#333"/>'
        )
        out.append(
            f'<text x="{_LEFT - 8}" y="{fmt(y + 4)}" text-anchor="end" '
            f'font-size="11" font-family="sans-serif">{escape(f"{tick:.3g}")}</text>'
        )
    slot = plot_w / len(stats)
    for i, (label, (w_lo, q1, med, q3, w_hi)) in enumerate(stats):
        cx = _LEFT + (i + 0.5) * slot
        x0, x1 = cx - _BOX_W / 2, cx + _BOX_W / 2
        out.append(
            f'<line x1="{fmt(cx)}" y1="{fmt(ty(w_lo))}" x2="{fmt(cx)}" '
            f'y2="{fmt(ty(w_hi))}" stroke="#333"/>'
        )
        for w in (w_lo, w_hi):
            out.append(
                f'<line x1="{fmt(cx - 10)}" y1="{fmt(ty(w))}" x2="{fmt(cx + 10)}" '
                f'y2="{fmt(ty(w))}" stroke="#333"/>'
            )
        out.append(
            f'<rect x="{fmt(x0)}" y="{fmt(ty(q3))}" width="{_BOX_W}" '
            f'height="{fmt(max(ty(q1) - ty(q3), 0.5))}" fill="#9ecae1" stroke="#333"/>'
        )
        out.append(
            f'<line x1="{fmt(x0)}" y1="{fmt(ty(med))}" x2="{fmt(x1)}" '
            f'y2="{fmt(ty(med))}" stroke="#08306b" stroke-width="2"/>'
        )
        out.append(
            f'<text x="{fmt(cx)}" y="{_H - _BOTTOM + 18}" text-anchor="middle" '
            f'font-size="11" font-family="sans-serif">{escape(f"{label:g}")}</text>'
        )
    out.append(
        f'<text x="{_LEFT + plot_w / 2}" y="{_H - 12}" text-anchor="middle" '
        f'font-size="12" font-family="sans-serif">window (s)</text>'
    )
    out.append(
        f'<text x="16" y="{_TOP + plot_h / 2}" text-anchor="middle" font-size="12" '
        f'font-family="sans-serif" transform="rotate(-90 16 {_TOP + plot_h / 2})">'
        f"{escape(metric)}</text>"
    )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _plottable(report: SweepReport) -> list[SweepRow]:
    return [r for r in report.rows if not r.failed]


def render_all(report: SweepReport, out_dir: str | Path) -> list[Path]:
    """Write report.csv plus accuracy/loss/epoch box plots; returns the paths.

    Failed durations appear in the CSV only; plots cover the rows that ran.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [out / "report.csv"]
    write_report_csv(report, written[0])
    rows = _plottable(report)
    if rows:
        panels = [
            ("accuracy_boxplot.svg", "accuracy (%)", lambda f: f.accuracy * 100.0),
            ("loss_boxplot.svg", "cross-entropy loss", lambda f: f.loss),
            ("epochs_boxplot.svg", "epochs to best", lambda f: float(f.epochs_to_best)),
        ]
        for name, metric, pick in panels:
            groups = [(r.window_sec, [pick(f) for f in r.folds]) for r in rows]
            path = out / name
            path.write_text(render_boxplot_svg(groups, metric))
            written.append(path)
    return written


# ---------------------------------------------------------------------------
# JSON archive
# ---------------------------------------------------------------------------


def save_report(report: SweepReport, path: str | Path) -> None:
    doc = {
        "seed": report.seed,
        "dataset_fingerprint": report.dataset_fingerprint,
        "config": report.config,
        "rows": [
            {
                "window_sec": row.window_sec,
                "k1": row.k1,
                "k2": row.k2,
                "failed": row.failed,
                "reason": row.reason,
                "folds": [
                    {
                        "fold": f.fold,
                        "accuracy": f.accuracy,
                        "loss": f.loss,
                        "epochs_to_best": f.epochs_to_best,
                    }
                    for f in row.folds
                ],
            }
            for row in report.rows
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def load_report(path: str | Path) -> SweepReport:
    doc = json.loads(Path(path).read_text())
    rows = [
        SweepRow(
            window_sec=row["window_sec"],
            k1=row["k1"],
            k2=row["k2"],
            failed=row["failed"],
            reason=row["reason"],
            folds=[
                FoldResult(
                    fold=f["fold"],
                    accuracy=f["accuracy"],
                    loss=f["loss"],
                    epochs_to_best=f["epochs_to_best"],
                )
                for f in row["folds"]
            ],
        )
        for row in doc["rows"]
    ]
    return SweepReport(
        rows=rows,
        seed=doc["seed"],
        dataset_fingerprint=doc["dataset_fingerprint"],
        config=doc["config"],
    )
