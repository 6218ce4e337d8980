"""Figure rendering for report bundles.

Renders the plot-data series of a bundle to PNG files: rate-distortion
curves per metric, DMOS curves with confidence bands (uncompressed
configurations drawn as horizontal bands), and metric-vs-DMOS scatter
plots with the fitted logistic curve and its +/-2 sigma envelope.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .pipeline import ANCHOR_CODEC, TEST_CODEC, ReportBundle

_CODEC_STYLE = {ANCHOR_CODEC: dict(color="tab:red", marker="s"),
                TEST_CODEC: dict(color="tab:blue", marker="o")}


def render_figures(bundle: ReportBundle, out_dir: str | Path) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    written += _render_rd_curves(bundle, out_dir)
    written += _render_dmos_curves(bundle, out_dir)
    written += _render_scatter(bundle, out_dir)
    return written


def _render_rd_curves(bundle: ReportBundle, out_dir: Path) -> list[Path]:
    written = []
    for key in sorted(bundle.rd_curves):
        scene, metric = key.split("/")
        fig, ax = plt.subplots(figsize=(5, 4))
        for codec in _CODEC_STYLE:
            points = [(r, q) for c, r, q in bundle.rd_curves[key] if c == codec]
            if not points:
                continue
            rates, qualities = zip(*sorted(points))
            ax.plot(rates, qualities, label=codec, **_CODEC_STYLE[codec])
        ax.set_xscale("log")
        ax.set_xlabel("Bitrate (Mbps)")
        ax.set_ylabel(metric)
        ax.set_title(scene)
        ax.grid(True, which="both", alpha=0.3)
        ax.legend()
        target = out_dir / f"rd_{metric}_{scene}.png"
        fig.savefig(target, dpi=110, bbox_inches="tight")
        plt.close(fig)
        written.append(target)
    return written


def _render_dmos_curves(bundle: ReportBundle, out_dir: Path) -> list[Path]:
    written = []
    for scene in sorted(bundle.dmos_points):
        points = bundle.dmos_points[scene]
        fig, ax = plt.subplots(figsize=(5, 4))
        rates = [p["rate_mbps"] for p in points if p.get("rate_mbps")]
        if not rates:
            plt.close(fig)
            continue
        span = (min(rates), max(rates))
        for codec in _CODEC_STYLE:
            curve = sorted((p["rate_mbps"], p["dmos"], p["ci_half_width"])
                           for p in points if p.get("codec") == codec)
            if not curve:
                continue
            r, d, c = zip(*curve)
            style = _CODEC_STYLE[codec]
            ax.errorbar(r, d, yerr=c, label=codec, capsize=3, **style)
        for p in points:
            if p.get("rate_mbps"):
                continue
            level, half = p["dmos"], p["ci_half_width"]
            color = "tab:green" if p["config"] == "REF" else "tab:orange"
            ax.axhline(level, color=color, linestyle="--", linewidth=1,
                       label=p["config"])
            ax.fill_between(span, level - half, level + half, color=color, alpha=0.15)
        ax.set_xscale("log")
        ax.set_xlabel("Bitrate (Mbps)")
        ax.set_ylabel("DMOS")
        ax.set_title(scene)
        ax.grid(True, which="both", alpha=0.3)
        ax.legend(fontsize=8)
        target = out_dir / f"dmos_{scene}.png"
        fig.savefig(target, dpi=110, bbox_inches="tight")
        plt.close(fig)
        written.append(target)
    return written


def _render_scatter(bundle: ReportBundle, out_dir: Path) -> list[Path]:
    written = []
    for report in bundle.correlation:
        fig, ax = plt.subplots(figsize=(5, 4))
        ax.scatter(report.xs, report.ys, s=18, color="tab:blue", alpha=0.7,
                   label="scores")
        ax.plot(report.curve_x, report.curve_y, color="tab:red", label="logistic fit")
        half = report.band_half_width
        ax.fill_between(report.curve_x, report.curve_y - half, report.curve_y + half,
                        color="tab:red", alpha=0.15, label="fit +/- 2 sigma")
        ax.set_xlabel(report.metric_id)
        ax.set_ylabel("DMOS")
        ax.set_title(f"{report.metric_id}: SROCC {report.srocc:.3f}, "
                     f"PLCC {report.plcc:.3f}")
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize=8)
        target = out_dir / f"scatter_{report.metric_id}.png"
        fig.savefig(target, dpi=110, bbox_inches="tight")
        plt.close(fig)
        written.append(target)
    return written
