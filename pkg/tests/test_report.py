"""CSV formatting, SVG box plots and the JSON archive round-trip."""

import xml.etree.ElementTree as ET

import numpy as np
import pytest

from harwin.experiment import FoldResult, SweepReport, SweepRow
from harwin.report import (
    CSV_HEADER,
    _box_stats,
    format_report_csv,
    load_report,
    render_all,
    render_boxplot_svg,
    save_report,
)


def _report(rows):
    return SweepReport(rows=rows, seed=42, dataset_fingerprint="sha256:feed", config={"folds": 8})


def _row(window_sec=0.5, k=(7, 11), folds=None, **kw):
    return SweepRow(window_sec=window_sec, k1=k[0], k2=k[1], folds=folds or [], **kw)


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def test_csv_header_is_frozen():
    assert CSV_HEADER == "window_sec,k1,k2,acc_mean,acc_std,loss_mean,loss_std,epochs_mean,epochs_std"


def test_csv_row_formatting():
    folds = [
        FoldResult(0, accuracy=0.999, loss=0.002, epochs_to_best=100),
        FoldResult(1, accuracy=1.0, loss=0.004, epochs_to_best=600),
    ]
    text = format_report_csv(_report([_row(folds=folds)]))
    lines = text.splitlines()
    assert lines[0] == CSV_HEADER
    # acc: mean 99.95%, sample std 0.0707% -> 0.07 at 2 dp
    assert lines[1] == "0.5,7,11,99.95,0.07,0.003,0.001,350.0,353.6"
    assert text.endswith("\n")
    assert "\r" not in text


def test_csv_failed_row_uses_na():
    text = format_report_csv(_report([_row(0.03, (3, 5), failed=True, reason="nope")]))
    assert text.splitlines()[1] == "0.03,3,5,NA,NA,NA,NA,NA,NA"


def test_csv_window_column_drops_trailing_zeros():
    folds = [FoldResult(0, 0.5, 1.0, 10), FoldResult(1, 0.5, 1.0, 10)]
    text = format_report_csv(
        _report([_row(1.0, folds=folds), _row(0.25, (3, 5), folds=folds)])
    )
    assert text.splitlines()[1].startswith("1,")
    assert text.splitlines()[2].startswith("0.25,")


# ---------------------------------------------------------------------------
# box stats / SVG
# ---------------------------------------------------------------------------


def test_box_stats_octave_example():
    # 1..8 with linear interpolation: Q1 2.75, median 4.5, Q3 6.25
    lo, q1, med, q3, hi = _box_stats(list(map(float, range(1, 9))))
    assert (lo, hi) == (1.0, 8.0)
    assert q1 == pytest.approx(2.75)
    assert med == pytest.approx(4.5)
    assert q3 == pytest.approx(6.25)


def test_box_stats_matches_numpy_percentile():
    rng = np.random.default_rng(0)
    vals = rng.normal(size=11).tolist()
    _, q1, med, q3, _ = _box_stats(vals)
    assert [q1, med, q3] == pytest.approx(np.percentile(vals, [25, 50, 75]).tolist())


def test_svg_is_well_formed_with_one_box_per_group():
    groups = [(0.1, [1.0, 2.0, 3.0]), (0.5, [2.0, 2.5, 4.0]), (1.0, [0.5, 1.5])]
    svg = render_boxplot_svg(groups, "accuracy (%)")
    root = ET.fromstring(svg)
    assert root.tag.endswith("svg")
    rects = [e for e in root.iter() if e.tag.endswith("rect")]
    # background + frame + one box per group
    assert len(rects) == 2 + len(groups)
    texts = [e.text for e in root.iter() if e.tag.endswith("text")]
    assert "accuracy (%)" in texts
    assert "window (s)" in texts
    assert "0.1" in texts and "0.5" in texts and "1" in texts


def test_svg_handles_degenerate_equal_values():
    svg = render_boxplot_svg([(0.5, [2.0, 2.0, 2.0])], "loss")
    ET.fromstring(svg)  # parses
    assert "NaN" not in svg and "inf" not in svg


def test_svg_rejects_undersized_groups():
    with pytest.raises(ValueError, match="no groups"):
        render_boxplot_svg([], "x")
    with pytest.raises(ValueError, match=">= 2"):
        render_boxplot_svg([(0.5, [1.0])], "x")


def test_svg_is_deterministic():
    groups = [(0.1, [1.0, 5.0, 2.0]), (0.25, [4.0, 3.0])]
    assert render_boxplot_svg(groups, "m") == render_boxplot_svg(groups, "m")


# ---------------------------------------------------------------------------
# render_all / JSON archive
# ---------------------------------------------------------------------------


def _two_row_report():
    folds_a = [FoldResult(i, 0.7 + 0.02 * i, 0.5 - 0.01 * i, 10 + i) for i in range(4)]
    folds_b = [FoldResult(i, 0.9 + 0.01 * i, 0.2 - 0.01 * i, 30 + i) for i in range(4)]
    return _report([_row(0.1, (3, 5), folds_a), _row(0.5, (7, 11), folds_b)])


def test_render_all_writes_csv_and_plots(tmp_path):
    written = render_all(_two_row_report(), tmp_path)
    names = sorted(p.name for p in written)
    assert names == [
        "accuracy_boxplot.svg",
        "epochs_boxplot.svg",
        "loss_boxplot.svg",
        "report.csv",
    ]
    for p in written:
        assert p.exists() and p.stat().st_size > 0


def test_render_all_with_only_failed_rows_writes_csv_only(tmp_path):
    rep = _report([_row(0.03, (3, 5), failed=True, reason="won't fit")])
    written = render_all(rep, tmp_path)
    assert [p.name for p in written] == ["report.csv"]


def test_json_round_trip_preserves_everything(tmp_path):
    rep = _two_row_report()
    rep.rows.append(_row(0.03, (3, 5), failed=True, reason="too short"))
    path = tmp_path / "report.json"
    save_report(rep, path)
    back = load_report(path)
    assert back.seed == rep.seed
    assert back.dataset_fingerprint == rep.dataset_fingerprint
    assert back.config == rep.config
    assert len(back.rows) == 3
    for orig, got in zip(rep.rows, back.rows):
        assert got.window_sec == orig.window_sec
        assert (got.k1, got.k2, got.failed, got.reason) == (orig.k1, orig.k2, orig.failed, orig.reason)
        for fo, fg in zip(orig.folds, got.folds):
            # floats survive exactly thanks to round-tripping repr
            assert fg.accuracy == fo.accuracy
            assert fg.loss == fo.loss
            assert fg.epochs_to_best == fo.epochs_to_best


def test_json_save_is_byte_stable(tmp_path):
    rep = _two_row_report()
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    save_report(rep, p1)
    save_report(load_report(p1), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_regenerated_outputs_are_byte_identical(tmp_path):
    rep = _two_row_report()
    d1, d2 = tmp_path / "one", tmp_path / "two"
    render_all(rep, d1)
    save_report(rep, tmp_path / "r.json")
    render_all(load_report(tmp_path / "r.json"), d2)
    for name in ("report.csv", "accuracy_boxplot.svg", "loss_boxplot.svg", "epochs_boxplot.svg"):
        assert (d1 / name).read_bytes() == (d2 / name).read_bytes(), name
