"""End-to-end report pipeline: votes and metric tables in, report bundle out.

A run manifest (JSON) names every input plus the analysis knobs. The
pipeline validates everything first and renders the whole bundle in
memory, so a failing run never leaves a partial bundle on disk. All
serialization is deterministic: identical inputs produce byte-identical
bundles.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bd as bd_mod
from .catalog import (CODECS, RATE_INDICES, EncodeManifest, build_pvs_catalog,
                      load_encode_manifest, load_scene_table, validate_rate_ladder)
from .correlation import CorrelationReport, correlation_report
from .session import SessionPlan, import_votes
from .subjective import (DmosResult, ScoreMatrix, SignificanceGrid,
                         differential_scores, dmos, remove_bias,
                         screen_observers, significance_matrix)

ANCHOR_CODEC, TEST_CODEC = CODECS  # BD deltas report the second codec against the first

METRIC_TABLE_COLUMNS = ("scene_id", "config", "metric_id", "value")


@dataclass
class RunManifest:
    """Input locations and knobs for one pipeline run."""

    scene_table: Path
    encode_manifest: Path
    session_plan: Path
    vote_log: Path
    metric_table: Path | None = None
    bias_correction: bool = True
    include_uncompressed_in_correlation: bool = False
    plcc_on_raw: bool = False
    ratio_band: tuple[float, float] = (1.5, 2.5)

    @classmethod
    def load(cls, path: str | Path) -> "RunManifest":
        path = Path(path)
        data = json.loads(path.read_text())
        base = path.parent

        def resolve(key, required=True):
            value = data.get(key)
            if value is None:
                if required:
                    raise ValueError(f"{path}: run manifest missing {key!r}")
                return None
            return (base / value).resolve() if not Path(value).is_absolute() else Path(value)

        return cls(
            scene_table=resolve("scene_table"),
            encode_manifest=resolve("encode_manifest"),
            session_plan=resolve("session_plan"),
            vote_log=resolve("vote_log"),
            metric_table=resolve("metric_table", required=False),
            bias_correction=bool(data.get("bias_correction", True)),
            include_uncompressed_in_correlation=bool(
                data.get("include_uncompressed_in_correlation", False)),
            plcc_on_raw=bool(data.get("plcc_on_raw", False)),
            ratio_band=tuple(data.get("ratio_band", (1.5, 2.5))),
        )


def load_metric_table(path: str | Path) -> dict[str, dict[tuple[str, str], float]]:
    """Metric table csv (scene_id,config,metric_id,value) -> per-metric maps."""
    path = Path(path)
    tables: dict[str, dict[tuple[str, str], float]] = {}
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if not row or not any(c.strip() for c in row):
                continue
            if lineno == 1:
                if [c.strip() for c in row] != list(METRIC_TABLE_COLUMNS):
                    raise ValueError(
                        f"{path}:1: expected header {','.join(METRIC_TABLE_COLUMNS)}")
                continue
            if len(row) != 4:
                raise ValueError(f"{path}:{lineno}: expected 4 fields")
            scene_id, config, metric_id, raw = (c.strip() for c in row)
            try:
                value = float(raw)
            except ValueError:
                raise ValueError(f"{path}:{lineno}: bad value {raw!r}") from None
            table = tables.setdefault(metric_id, {})
            key = (scene_id, config)
            if key in table:
                raise ValueError(f"{path}:{lineno}: duplicate {metric_id} entry for {key}")
            table[key] = value
    return tables


@dataclass
class BdLimitsRecord:
    scene_id: str
    metric_id: str
    mode: str  # "rate" or "quality"
    nominal: float
    lower: float
    upper: float
    warnings: list[str] = field(default_factory=list)


@dataclass
class BdObjectiveRecord:
    scene_id: str
    metric_id: str
    bd_rate_percent: float
    bd_quality: float
    warnings: list[str] = field(default_factory=list)


@dataclass
class ReportBundle:
    """Everything one run produces, renderable to deterministic files."""

    screening_diagnostics: list
    rejected_observers: list[str]
    bias_correction: bool
    dmos_results: list[DmosResult]
    significance: dict[str, SignificanceGrid]
    bd_objective: list[BdObjectiveRecord]
    bd_dmos: list[BdLimitsRecord]
    correlation: list[CorrelationReport]
    ladder_warnings: list
    rd_curves: dict[str, list[tuple[str, float, float]]]  # per "scene/metric": (codec, rate, quality)
    dmos_points: dict[str, list[dict]]  # per scene: config rows incl. REF/4K bands

    def files(self) -> dict[str, bytes]:
        out: dict[str, bytes] = {}
        out["screening.json"] = _json_bytes({
            "rejected_observers": self.rejected_observers,
            "observers": [{
                "observer_id": d.observer_id,
                "p_count": d.p_count,
                "q_count": d.q_count,
                "population_count": d.population_count,
                "outlier_ratio": d.outlier_ratio,
                "rejected": d.rejected,
                "provenance": {"operation": "screen_observers",
                               "input_key": d.observer_id},
            } for d in self.screening_diagnostics],
        })
        out["ladder_warnings.json"] = _json_bytes([
            {"scene_id": w.scene_id, "kind": w.kind, "message": w.message,
             "provenance": {"operation": "validate_rate_ladder", "input_key": w.scene_id}}
            for w in self.ladder_warnings])

        out["dmos.csv"] = _csv_bytes(
            ["scene_id", "config", "dmos", "stddev", "ci95_half_width", "n"],
            [[r.scene_id, r.config_label, _f(r.dmos), _f(r.stddev),
              _f(r.ci95_half_width), r.n] for r in self.dmos_results])
        out["dmos.json"] = _json_bytes([{
            "scene_id": r.scene_id, "config": r.config_label, "dmos": r.dmos,
            "stddev": r.stddev, "ci95_half_width": r.ci95_half_width, "n": r.n,
            "bias_corrected": self.bias_correction,
            "provenance": {"operation": "dmos",
                           "input_key": f"{r.scene_id}/{r.config_label}"},
        } for r in self.dmos_results])

        significance_json = []
        for scene in sorted(self.significance):
            grid = self.significance[scene]
            rows = [[row_label] + [format(grid.p[i, j], ".2f")
                                   for j in range(len(grid.col_labels))]
                    for i, row_label in enumerate(grid.row_labels)]
            out[f"significance/{scene}.csv"] = _csv_bytes(
                ["config"] + list(grid.col_labels), rows)
            significance_json.append({
                "scene_id": scene,
                "row_labels": list(grid.row_labels),
                "col_labels": list(grid.col_labels),
                "p": [[grid.p[i, j] for j in range(len(grid.col_labels))]
                      for i in range(len(grid.row_labels))],
                "significant": [[bool(grid.p[i, j] < 0.05)
                                 for j in range(len(grid.col_labels))]
                                for i in range(len(grid.row_labels))],
                "provenance": {"operation": "significance_matrix", "input_key": scene},
            })
        out["significance.json"] = _json_bytes(significance_json)

        out["bd_objective.csv"] = _csv_bytes(
            ["scene_id", "metric_id", "bd_rate_percent", "bd_quality", "warnings"],
            [[r.scene_id, r.metric_id, _f(r.bd_rate_percent), _f(r.bd_quality),
              "; ".join(r.warnings)] for r in self.bd_objective])
        out["bd_objective.json"] = _json_bytes([{
            "scene_id": r.scene_id, "metric_id": r.metric_id,
            "bd_rate_percent": r.bd_rate_percent, "bd_quality": r.bd_quality,
            "anchor": ANCHOR_CODEC, "test": TEST_CODEC, "warnings": r.warnings,
            "provenance": {"operation": "bd_rate+bd_quality",
                           "input_key": f"{r.scene_id}/{r.metric_id}"},
        } for r in self.bd_objective])

        out["bd_dmos.csv"] = _csv_bytes(
            ["scene_id", "mode", "nominal", "lower", "upper", "warnings"],
            [[r.scene_id, r.mode, _f(r.nominal), _f(r.lower), _f(r.upper),
              "; ".join(r.warnings)] for r in self.bd_dmos])
        out["bd_dmos.json"] = _json_bytes([{
            "scene_id": r.scene_id, "mode": r.mode, "nominal": r.nominal,
            "lower": r.lower, "upper": r.upper,
            "anchor": ANCHOR_CODEC, "test": TEST_CODEC, "warnings": r.warnings,
            "provenance": {"operation": f"bd_{r.mode}_limits", "input_key": r.scene_id},
        } for r in self.bd_dmos])

        out["correlation.csv"] = _csv_bytes(
            ["metric_id", "srocc", "plcc", "krocc", "rmse",
             "beta1", "beta2", "beta3", "beta4", "residual_std"],
            [[c.metric_id, _f(c.srocc), _f(c.plcc), _f(c.krocc), _f(c.rmse),
              _f(c.fit.beta1), _f(c.fit.beta2), _f(c.fit.beta3), _f(c.fit.beta4),
              _f(c.residual_std)] for c in self.correlation])
        out["correlation.json"] = _json_bytes([{
            "metric_id": c.metric_id, "srocc": c.srocc, "plcc": c.plcc,
            "krocc": c.krocc, "rmse": c.rmse,
            "fit": {"beta1": c.fit.beta1, "beta2": c.fit.beta2,
                    "beta3": c.fit.beta3, "beta4": c.fit.beta4},
            "residual_std": c.residual_std,
            "provenance": {"operation": "correlation_report", "input_key": c.metric_id},
        } for c in self.correlation])
        return out

    def plot_series(self) -> dict[str, bytes]:
        """Per-figure data series: RD curves, DMOS curves with CI bands,
        and scatter/fit/band tables per metric."""
        out: dict[str, bytes] = {}
        for key in sorted(self.rd_curves):
            scene, metric = key.split("/")
            rows = [[codec, _f(rate), _f(quality)]
                    for codec, rate, quality in self.rd_curves[key]]
            out[f"curves/rd_{metric}_{scene}.csv"] = _csv_bytes(
                ["codec", "rate_mbps", "quality"], rows)
        for scene in sorted(self.dmos_points):
            rows = []
            for point in self.dmos_points[scene]:
                rows.append([point["config"], point.get("codec", ""),
                             _f(point["rate_mbps"]) if point.get("rate_mbps") else "",
                             _f(point["dmos"]), _f(point["ci_half_width"])])
            out[f"curves/dmos_{scene}.csv"] = _csv_bytes(
                ["config", "codec", "rate_mbps", "dmos", "ci_half_width"], rows)
        for report in self.correlation:
            points = [[_f(x), _f(y)] for x, y in zip(report.xs, report.ys)]
            out[f"scatter/{report.metric_id}_points.csv"] = _csv_bytes(
                ["metric_value", "dmos"], points)
            half = report.band_half_width
            fit_rows = [[_f(x), _f(y), _f(y - half), _f(y + half)]
                        for x, y in zip(report.curve_x, report.curve_y)]
            out[f"scatter/{report.metric_id}_fit.csv"] = _csv_bytes(
                ["metric_value", "fitted_dmos", "band_low", "band_high"], fit_rows)
        return out

    def write(self, out_dir: str | Path, include_series: bool = True) -> list[Path]:
        out_dir = Path(out_dir)
        files = dict(self.files())
        if include_series:
            files.update(self.plot_series())
        written = []
        for rel, payload in sorted(files.items()):
            target = out_dir / rel
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_bytes(payload)
            written.append(target)
        return written


def _f(x: float) -> str:
    if x is None:
        return ""
    return repr(float(x))


def _csv_bytes(header: list[str], rows: list[list]) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue().encode()


def _json_bytes(obj) -> bytes:
    return (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode()


def _dmos_by_key(results: list[DmosResult]) -> dict[tuple[str, str], DmosResult]:
    return {(r.scene_id, r.config_label): r for r in results}


def run_pipeline(manifest: RunManifest) -> ReportBundle:
    """Execute the full analysis chain for one run manifest."""
    scenes = load_scene_table(manifest.scene_table)
    encode_manifest = load_encode_manifest(manifest.encode_manifest)
    build_pvs_catalog(scenes, encode_manifest)  # completeness check
    plan = SessionPlan.load(manifest.session_plan)
    votes = import_votes(manifest.vote_log)
    metric_tables = (load_metric_table(manifest.metric_table)
                     if manifest.metric_table else {})

    ladder_warnings = validate_rate_ladder(encode_manifest, manifest.ratio_band)

    matrix = differential_scores(votes, plan)
    retained, rejected, diagnostics = screen_observers(matrix)
    analyzed = remove_bias(retained) if manifest.bias_correction else retained

    dmos_results = dmos(analyzed)
    by_key = _dmos_by_key(dmos_results)

    significance = {scene: significance_matrix(analyzed, scene)
                    for scene in analyzed.scenes()}

    scene_ids = sorted(s.scene_id for s in scenes)
    bd_objective: list[BdObjectiveRecord] = []
    rd_curves: dict[str, list[tuple[str, float, float]]] = {}
    for metric_id in sorted(metric_tables):
        table = metric_tables[metric_id]
        for scene_id in scene_ids:
            curves = {}
            for codec in CODECS:
                points = []
                for ri in RATE_INDICES:
                    key = (scene_id, f"{codec}_R{ri}")
                    if key not in table:
                        raise ValueError(
                            f"metric table missing {metric_id} for {key[0]}/{key[1]}")
                    rate = encode_manifest.row(scene_id, codec, ri).bitrate_mbps
                    points.append(bd_mod.RdPoint(rate, table[key]))
                curves[codec] = bd_mod.RdCurve(codec, metric_id, points)
            rate_result = bd_mod.bd_rate(curves[ANCHOR_CODEC], curves[TEST_CODEC])
            quality_result = bd_mod.bd_quality(curves[ANCHOR_CODEC], curves[TEST_CODEC])
            bd_objective.append(BdObjectiveRecord(
                scene_id, metric_id, rate_result.bd_rate_percent,
                quality_result.bd_quality, rate_result.warnings))
            rd_curves[f"{scene_id}/{metric_id}"] = [
                (codec, p.rate_mbps, p.quality)
                for codec in CODECS for p in curves[codec].points]

    bd_dmos: list[BdLimitsRecord] = []
    dmos_points: dict[str, list[dict]] = {}
    for scene_id in scene_ids:
        sides = {}
        for codec in CODECS:
            side = []
            for ri in RATE_INDICES:
                result = by_key.get((scene_id, f"{codec}_R{ri}"))
                if result is None:
                    raise ValueError(f"no DMOS for {scene_id}/{codec}_R{ri}")
                rate = encode_manifest.row(scene_id, codec, ri).bitrate_mbps
                side.append((rate, result))
            sides[codec] = side
        for mode, op in (("rate", bd_mod.bd_rate_limits),
                         ("quality", bd_mod.bd_quality_limits)):
            nominal, lower, upper = op(sides[ANCHOR_CODEC], sides[TEST_CODEC])
            value = lambda r: r.bd_rate_percent if mode == "rate" else r.bd_quality
            bd_dmos.append(BdLimitsRecord(
                scene_id, "dmos", mode, value(nominal), value(lower), value(upper),
                nominal.warnings))

        points = []
        for codec in CODECS:
            for rate, result in sides[codec]:
                points.append({"config": result.config_label, "codec": codec,
                               "rate_mbps": rate, "dmos": result.dmos,
                               "ci_half_width": result.ci95_half_width})
        for label in ("4K", "REF"):
            result = by_key.get((scene_id, label))
            if result is not None:
                points.append({"config": label, "rate_mbps": None,
                               "dmos": result.dmos,
                               "ci_half_width": result.ci95_half_width})
        dmos_points[scene_id] = points

    dmos_table = {key: r.dmos for key, r in by_key.items()}
    correlation = (correlation_report(
        dmos_table, metric_tables,
        include_uncompressed=manifest.include_uncompressed_in_correlation,
        plcc_on_raw=manifest.plcc_on_raw) if metric_tables else [])

    return ReportBundle(
        screening_diagnostics=diagnostics,
        rejected_observers=rejected,
        bias_correction=manifest.bias_correction,
        dmos_results=dmos_results,
        significance=significance,
        bd_objective=bd_objective,
        bd_dmos=bd_dmos,
        correlation=correlation,
        ladder_warnings=ladder_warnings,
        rd_curves=rd_curves,
        dmos_points=dmos_points,
    )


def emit_plots(bundle: ReportBundle, out_dir: str | Path) -> list[Path]:
    """Write the plot-data series of a bundle under out_dir."""
    out_dir = Path(out_dir)
    written = []
    for rel, payload in sorted(bundle.plot_series().items()):
        target = out_dir / rel
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_bytes(payload)
        written.append(target)
    return written
