import csv
import dataclasses
import os

import numpy as np
import pytest

from core.deform import parse_deformation
from core.evaluation import (TRUE_POSITIVE, EvalReport, EvaluationSettings,
                             PairRecord, build_delta_phi_histogram,
                             build_rate_curve)
from core.report import (PLOT_FILES, REPORT_FILES, config_text, export_report,
                         export_sweep, pairs_csv)


def make_report(tmp_path, spec="rot:90", seed=0):
    rng = np.random.default_rng(seed)
    settings = EvaluationSettings()
    pairs = tuple(
        PairRecord(id_a=f"img_{i}.pgm", id_b=f"img_{i}.pgm@{spec}", n_a=100, n_b=90,
                   n_matches=int(rate * 90), rate=float(rate))
        for i, rate in enumerate(rng.random(5))
    )
    dphi = (90.0 + rng.normal(scale=4.0, size=200)) % 360.0
    return EvalReport(
        mode=TRUE_POSITIVE,
        deformation=parse_deformation(spec),
        settings=settings,
        corpus_root=tmp_path / "corpus",
        corpus_size=5,
        curve=build_rate_curve(TRUE_POSITIVE, [p.rate for p in pairs], settings.thresholds),
        histogram=build_delta_phi_histogram(dphi, settings.histogram_bins),
        pairs=pairs,
        warnings=("skipped broken.pgm: truncated raster",),
    )


def read_rows(path):
    with open(path, newline="") as f:
        return list(csv.reader(f))


def test_writes_report_files(tmp_path):
    written = export_report(make_report(tmp_path), tmp_path / "out")
    assert sorted(p.name for p in written) == sorted(REPORT_FILES)
    assert sorted(p.name for p in (tmp_path / "out").iterdir()) == sorted(REPORT_FILES)


def test_curve_and_histogram_parse_back(tmp_path):
    report = make_report(tmp_path)
    export_report(report, tmp_path / "out")

    curve_rows = read_rows(tmp_path / "out" / "curve.csv")
    assert curve_rows[0] == ["r_T", "rate"]
    assert len(curve_rows) == 1 + len(report.curve.thresholds)
    for (t, r), expected_t, expected_r in zip(curve_rows[1:], report.curve.thresholds, report.curve.rates):
        assert abs(float(t) - expected_t) <= 5e-7
        assert abs(float(r) - expected_r) <= 5e-7

    dphi_rows = read_rows(tmp_path / "out" / "dphi.csv")
    assert dphi_rows[0] == ["bin_center_deg", "probability"]
    assert len(dphi_rows) == 65
    probabilities = np.array([float(p) for _, p in dphi_rows[1:]])
    assert abs(probabilities.sum() - 1.0) < 64 * 5e-7
    assert float(dphi_rows[1 + report.histogram.mode_bin][0]) == pytest.approx(report.histogram.mode_center)


def test_pairs_csv_quotes_warnings(tmp_path):
    report = make_report(tmp_path)
    record = PairRecord("a.pgm", "a.pgm@rot:90", 10, 0, 0, 0.0, "a.pgm@rot:90: too small, 8x8")
    report = dataclasses.replace(report, pairs=(record,))
    rows = list(csv.reader(pairs_csv(report).splitlines()))
    assert rows[0] == ["id_a", "id_b", "n_a", "n_b", "matches", "rate", "warning"]
    assert rows[1] == ["a.pgm", "a.pgm@rot:90", "10", "0", "0", "0.000000", "a.pgm@rot:90: too small, 8x8"]


def test_config_echo(tmp_path):
    text = config_text(make_report(tmp_path))
    lines = text.splitlines()
    assert "mode = true_positive" in lines
    assert "deformation = rot:90" in lines
    assert "matching.ratio = 0.8" in lines
    assert "corpus_size = 5" in lines
    assert lines[-1] == "warning = skipped broken.pgm: truncated raster"


def test_output_is_byte_identical(tmp_path):
    report = make_report(tmp_path)
    export_report(report, tmp_path / "one")
    export_report(report, tmp_path / "two")
    for name in REPORT_FILES:
        assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "two" / name).read_bytes()


def test_svg_plots_are_deterministic(tmp_path):
    pytest.importorskip("matplotlib")
    report = make_report(tmp_path)
    export_report(report, tmp_path / "one", plot=True)
    export_report(report, tmp_path / "two", plot=True)
    for name in PLOT_FILES:
        data = (tmp_path / "one" / name).read_bytes()
        assert data.lstrip().startswith(b"<?xml")
        assert data == (tmp_path / "two" / name).read_bytes()


def test_failed_publish_leaves_nothing(tmp_path, monkeypatch):
    real_replace = os.replace
    calls = []

    def flaky_replace(src, dst):
        calls.append(dst)
        if len(calls) == 3:
            raise OSError("disk full")
        real_replace(src, dst)

    monkeypatch.setattr("core.rollback.os.replace", flaky_replace)
    with pytest.raises(OSError, match="disk full"):
        export_report(make_report(tmp_path), tmp_path / "out" / "nested")
    assert not (tmp_path / "out").exists()


def test_sweep_layout(tmp_path):
    reports = [make_report(tmp_path, "rot:90"), make_report(tmp_path, "blur:30@45", seed=1)]
    export_sweep(reports, tmp_path / "sweep")
    root = tmp_path / "sweep"
    assert sorted(p.name for p in root.iterdir()) == ["blur_30_at_45", "rot_90", "summary.csv"]
    for name in ("rot_90", "blur_30_at_45"):
        assert sorted(p.name for p in (root / name).iterdir()) == sorted(REPORT_FILES)

    summary = read_rows(root / "summary.csv")
    assert summary[0][0] == "spec"
    assert [row[0] for row in summary[1:]] == ["rot:90", "blur:30@45"]
    assert float(summary[1][4]) == pytest.approx(reports[0].histogram.mode_center)


def test_sweep_custom_names_and_plots(tmp_path):
    pytest.importorskip("matplotlib")
    reports = [make_report(tmp_path, "rot:90"), make_report(tmp_path, "rot:180", seed=2)]
    export_sweep(reports, tmp_path / "sweep", plot=True, subdir_names=["a", "b"])
    root = tmp_path / "sweep"
    assert (root / "a" / "curve.svg").exists()
    assert (root / "curves.svg").exists()
    assert (root / "dphi.svg").exists()
