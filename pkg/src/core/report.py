"""
Evaluation report export (CSV, config echo, SVG plots) for sift-bench
"""

import csv
import io
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from core.evaluation import FALSE_POSITIVE, EvalReport
from core.image import PathLike
from core.rollback import RollbackManager

logger = logging.getLogger(__name__)

REPORT_FILES = ("curve.csv", "dphi.csv", "pairs.csv", "config.txt")
PLOT_FILES = ("curve.svg", "dphi.svg")

SVG_HASH_SALT = "sift-bench"


def _csv_text(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def curve_csv(report: EvalReport) -> str:
    rows = [(f"{t:.6f}", f"{r:.6f}") for t, r in zip(report.curve.thresholds, report.curve.rates)]
    return _csv_text(("r_T", "rate"), rows)


def dphi_csv(report: EvalReport) -> str:
    histogram = report.histogram
    rows = [(f"{c:.6f}", f"{p:.6f}") for c, p in zip(histogram.centers, histogram.probabilities)]
    return _csv_text(("bin_center_deg", "probability"), rows)


def pairs_csv(report: EvalReport) -> str:
    rows = [(p.id_a, p.id_b, p.n_a, p.n_b, p.n_matches, f"{p.rate:.6f}", p.warning) for p in report.pairs]
    return _csv_text(("id_a", "id_b", "n_a", "n_b", "matches", "rate", "warning"), rows)


def config_text(report: EvalReport) -> str:
    """Parameter echo plus run summary, one key = value per line"""
    fields: Dict[str, object] = {
        "mode": report.mode,
        "deformation": report.deformation.spec if report.deformation else "none",
        "corpus": report.corpus_root.as_posix(),
        "corpus_size": report.corpus_size,
    }
    fields.update(report.settings.echo())
    fields.update({
        "pairs": len(report.pairs),
        "matches": report.histogram.n_matches,
        "mean_rate": f"{report.mean_rate:.6f}",
        "median_rate": f"{report.median_rate:.6f}",
        "dphi_mode_deg": f"{report.histogram.mode_center:.6f}",
        "dphi_peak_probability": f"{report.histogram.peak_probability:.6f}",
    })
    lines = [f"{key} = {value}" for key, value in fields.items()]
    lines.extend(f"warning = {warning}" for warning in report.warnings)
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Plots
# ---------------------------------------------------------------------------

def _render_svg(draw, title: str, xlabel: str, ylabel: str) -> bytes:
    import matplotlib
    from matplotlib.figure import Figure

    with matplotlib.rc_context({"svg.hashsalt": SVG_HASH_SALT, "svg.fonttype": "none"}):
        figure = Figure(figsize=(6.4, 4.0))
        axes = figure.add_subplot(1, 1, 1)
        draw(axes)
        axes.set_title(title)
        axes.set_xlabel(xlabel)
        axes.set_ylabel(ylabel)
        axes.grid(True, linewidth=0.5, alpha=0.5)
        if len(axes.get_lines()) > 1:
            axes.legend(loc="best", fontsize="small")
        buffer = io.BytesIO()
        figure.savefig(buffer, format="svg", metadata={"Date": None})
    return buffer.getvalue()


def curve_svg(reports: Sequence[EvalReport]) -> bytes:
    """Rate curves of one or more reports on shared axes"""
    kind = "False positive" if reports[0].mode == FALSE_POSITIVE else "True positive"

    def draw(axes):
        for report in reports:
            axes.plot(report.curve.thresholds, report.curve.rates, label=report.label)
        axes.set_xlim(0.0, 1.0)
        axes.set_ylim(-0.02, 1.02)

    return _render_svg(draw, f"{kind} rate vs matching-rate threshold", "r_T", "rate")


def dphi_svg(reports: Sequence[EvalReport]) -> bytes:
    """Orientation-difference distributions of one or more reports on shared axes"""

    def draw(axes):
        for report in reports:
            axes.plot(report.histogram.centers, report.histogram.probabilities, label=report.label)
        axes.set_xlim(0.0, 360.0)
        axes.set_xticks(range(0, 361, 45))

    return _render_svg(draw, "Matched keypoint orientation difference", "delta phi (degrees)", "probability")


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------

def _stage_report(manager: RollbackManager, report: EvalReport, out_dir: Path, plot: bool) -> List[Path]:
    manager.ensure_dir(out_dir)
    written = [
        manager.stage_text(out_dir / "curve.csv", curve_csv(report)),
        manager.stage_text(out_dir / "dphi.csv", dphi_csv(report)),
        manager.stage_text(out_dir / "pairs.csv", pairs_csv(report)),
        manager.stage_text(out_dir / "config.txt", config_text(report)),
    ]
    if plot:
        written.append(manager.stage_bytes(out_dir / "curve.svg", curve_svg([report])))
        written.append(manager.stage_bytes(out_dir / "dphi.svg", dphi_svg([report])))
    return written


def export_report(report: EvalReport, out_dir: PathLike, plot: bool = False) -> List[Path]:
    """
    Write curve.csv, dphi.csv, pairs.csv and config.txt (plus SVGs with plot)

    Files are staged and published together; on any failure nothing of this
    export is left behind.

    Args:
        report: Evaluation report
        out_dir: Destination directory (created when missing)
        plot: Also render curve.svg and dphi.svg

    Returns:
        Written file paths
    """
    out_dir = Path(out_dir)
    with RollbackManager() as manager:
        written = _stage_report(manager, report, out_dir, plot)
    logger.info(f"Report written to {out_dir} ({len(written)} files)")
    return written


def summary_csv(reports: Sequence[EvalReport]) -> str:
    rows = [(r.label, len(r.pairs), f"{r.mean_rate:.6f}", f"{r.median_rate:.6f}",
             f"{r.histogram.mode_center:.6f}", f"{r.histogram.peak_probability:.6f}") for r in reports]
    return _csv_text(("spec", "pairs", "mean_rate", "median_rate", "mode_center_deg", "peak_probability"), rows)


def export_sweep(reports: Sequence[EvalReport], out_dir: PathLike, plot: bool = False,
                 subdir_names: Optional[Sequence[str]] = None) -> List[Path]:
    """
    One report directory per deformation plus summary.csv (and overlaid SVGs with plot)

    Args:
        reports: Reports of a sweep, in sweep order
        out_dir: Destination directory
        plot: Render per-report and overlaid plots
        subdir_names: Directory name per report (defaults to the deformation slug)

    Returns:
        Written file paths
    """
    out_dir = Path(out_dir)
    names = list(subdir_names) if subdir_names else [r.deformation.slug if r.deformation else r.label for r in reports]
    written = []
    with RollbackManager() as manager:
        for report, name in zip(reports, names):
            written.extend(_stage_report(manager, report, out_dir / name, plot))
        written.append(manager.stage_text(out_dir / "summary.csv", summary_csv(reports)))
        if plot:
            written.append(manager.stage_bytes(out_dir / "curves.svg", curve_svg(reports)))
            written.append(manager.stage_bytes(out_dir / "dphi.svg", dphi_svg(reports)))
    logger.info(f"Sweep of {len(reports)} deformations written to {out_dir} ({len(written)} files)")
    return written
