"""Command-line entry point.

Subcommands cover the whole toolkit: session planning and the vote
service, frame metrics and SI-TI, VMAF log ingestion, the subjective
statistics chain, Bjontegaard deltas, metric correlation, and the full
report pipeline (which also renders figures unless told otherwise).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

from . import bd as bd_mod
from . import vmaf
from .catalog import (build_pvs_catalog, load_encode_manifest, load_scene_table,
                      validate_rate_ladder)
from .correlation import correlation_report
from .metrics import ms_ssim_luma, sequence_metric
from .pipeline import RunManifest, load_metric_table, run_pipeline
from .session import (BtcTiming, SessionPlan, import_votes, plan_sessions)
from .siti import si_ti
from .subjective import (differential_scores, dmos, remove_bias, screen_observers,
                         significance_matrix, welch_t_test)
from .yuv import open_frames


def _emit(args, payload, default_name: str) -> None:
    """Write a result as json or csv to --out (file or directory) or stdout."""
    if args.format == "json":
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    else:
        rows = payload if isinstance(payload, list) else [payload]
        header = sorted({k for r in rows for k in r})
        import io
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([r.get(k, "") for k in header])
        text = buf.getvalue()
    if args.out:
        out = Path(args.out)
        if out.suffix:
            target = out
        else:
            out.mkdir(parents=True, exist_ok=True)
            target = out / f"{default_name}.{args.format}"
        target.write_text(text)
        print(f"wrote {target}")
    else:
        sys.stdout.write(text)


def _scene_meta(args):
    if not args.meta:
        return None
    scenes = load_scene_table(args.meta)
    if args.scene:
        for s in scenes:
            if s.scene_id == args.scene:
                return s
        raise SystemExit(f"scene {args.scene!r} not in {args.meta}")
    if len(scenes) != 1:
        raise SystemExit("scene table has several rows; pass --scene")
    return scenes[0]


def _cmd_plan(args):
    scenes = load_scene_table(args.scenes)
    manifest = load_encode_manifest(args.manifest)
    catalog = build_pvs_catalog(scenes, manifest)
    timing = BtcTiming(args.clip_seconds, args.grey_seconds, args.vote_seconds)
    plan = plan_sessions(catalog, args.sessions, args.seed, timing,
                         allow_adjacent_scenes=args.allow_adjacent_scenes)
    target = Path(args.out or "plan.json")
    if target.is_dir():
        target = target / "plan.json"
    plan.save(target)
    minutes = [plan.session_minutes(s) for s in plan.sessions]
    print(f"wrote {target}: {len(plan.all_btcs())} BTCs in {len(plan.sessions)} "
          f"sessions ({', '.join(f'{m:.1f} min' for m in minutes)})")


def _cmd_serve(args):
    from .service import VoteService
    plan = SessionPlan.load(args.plan)
    service = VoteService(plan, args.store, port=args.port)
    print(f"vote service on http://127.0.0.1:{service.port} "
          f"(store: {args.store}); Ctrl-C stops")
    try:
        service.serve_forever()
    except KeyboardInterrupt:
        pass


def _cmd_metrics(args):
    meta = _scene_meta(args)
    ref = open_frames(args.ref, meta)
    dist = open_frames(args.dist, meta)
    if args.metric == "msssim":
        result = ms_ssim_luma(ref, dist)
    else:
        result = sequence_metric(ref, dist, args.metric, pooling=args.pooling)
    payload = {
        "metric_id": result.metric_id,
        "aggregate": result.aggregate if math.isfinite(result.aggregate) else "inf",
        "frame_count": result.frame_count,
        "infinite_count": result.infinite_count,
    }
    if args.per_frame:
        payload["per_frame"] = [v if math.isfinite(v) else "inf"
                                for v in result.per_frame]
    _emit(args, payload, f"metric_{result.metric_id}")


def _cmd_siti(args):
    meta = _scene_meta(args)
    result = si_ti(open_frames(args.input, meta))
    payload = {"si": result.si, "ti": result.ti}
    if args.per_frame:
        payload["per_frame_si"] = result.per_frame_si
        payload["per_frame_ti"] = result.per_frame_ti
    _emit(args, payload, "siti")


def _cmd_ingest_vmaf(args):
    _emit(args, {"metric_id": "vmaf", "aggregate": vmaf.ingest_vmaf_log(args.log)},
          "vmaf")


def _load_matrix(args):
    plan = SessionPlan.load(args.plan)
    votes = import_votes(args.votes)
    return differential_scores(votes, plan)


def _cmd_screen(args):
    matrix = _load_matrix(args)
    _, rejected, diagnostics = screen_observers(matrix)
    _emit(args, [{
        "observer_id": d.observer_id, "p_count": d.p_count, "q_count": d.q_count,
        "population_count": d.population_count,
        "outlier_ratio": round(d.outlier_ratio, 6), "rejected": d.rejected,
    } for d in diagnostics], "screening")
    if rejected:
        print(f"rejected: {', '.join(rejected)}", file=sys.stderr)


def _cmd_dmos(args):
    matrix = _load_matrix(args)
    matrix, _, _ = screen_observers(matrix)
    if not args.no_bias_correction:
        matrix = remove_bias(matrix)
    _emit(args, [{
        "scene_id": r.scene_id, "config": r.config_label, "dmos": r.dmos,
        "stddev": r.stddev, "ci95_half_width": r.ci95_half_width, "n": r.n,
    } for r in dmos(matrix)], "dmos")


def _cmd_ttest(args):
    matrix = _load_matrix(args)
    matrix, _, _ = screen_observers(matrix)
    if not args.no_bias_correction:
        matrix = remove_bias(matrix)
    if args.config_a and args.config_b:
        result = welch_t_test(matrix.population(args.scene, args.config_a),
                              matrix.population(args.scene, args.config_b))
        _emit(args, {"scene_id": args.scene, "config_a": args.config_a,
                     "config_b": args.config_b, "t": result.t, "dof": result.dof,
                     "p": result.p, "degenerate": result.degenerate}, "ttest")
        return
    grid = significance_matrix(matrix, args.scene)
    _emit(args, [{
        "config": row,
        **{col: round(float(grid.p[i, j]), 4)
           for j, col in enumerate(grid.col_labels)},
    } for i, row in enumerate(grid.row_labels)], f"significance_{args.scene}")


def _load_curve(path, label):
    points = []
    metric_id = "quality"
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            metric_id = row.get("metric_id", metric_id) or metric_id
            points.append(bd_mod.RdPoint(float(row["rate_mbps"]),
                                         float(row["quality"])))
    return bd_mod.RdCurve(label, metric_id, points)


def _cmd_bd(args):
    anchor = _load_curve(args.anchor, "anchor")
    test = _load_curve(args.test, "test")
    if args.mode == "quality":
        result = bd_mod.bd_quality(anchor, test)
        payload = {"bd_quality": result.bd_quality}
    else:
        result = bd_mod.bd_rate(anchor, test)
        payload = {"bd_rate_percent": result.bd_rate_percent}
    payload.update({"mode": args.mode, "overlap_low": result.overlap[0],
                    "overlap_high": result.overlap[1],
                    "warnings": "; ".join(result.warnings)})
    if args.limits:
        from .subjective import DmosResult

        def side(curve, path):
            rows = list(csv.DictReader(open(path, newline="")))
            out = []
            for p, row in zip(curve.points, rows):
                half = float(row.get("ci_half_width") or 0.0)
                out.append((p.rate_mbps, DmosResult("", "", p.quality, 0.0, half, 2)))
            return out

        op = bd_mod.bd_rate_limits if args.mode == "rate" else bd_mod.bd_quality_limits
        nominal, lower, upper = op(side(anchor, args.anchor), side(test, args.test))
        pick = (lambda r: r.bd_rate_percent) if args.mode == "rate" \
            else (lambda r: r.bd_quality)
        payload.update({"nominal": pick(nominal), "lower": pick(lower),
                        "upper": pick(upper)})
    _emit(args, payload, f"bd_{args.mode}")


def _cmd_correlate(args):
    dmos_rows = list(csv.DictReader(open(args.dmos, newline="")))
    dmos_table = {(r["scene_id"], r["config"]): float(r["dmos"]) for r in dmos_rows}
    metric_tables = load_metric_table(args.metrics)
    reports = correlation_report(dmos_table, metric_tables,
                                 include_uncompressed=args.include_uncompressed,
                                 plcc_on_raw=args.plcc_raw)
    _emit(args, [{
        "metric_id": c.metric_id, "srocc": c.srocc, "plcc": c.plcc,
        "krocc": c.krocc, "rmse": c.rmse, "beta1": c.fit.beta1,
        "beta2": c.fit.beta2, "beta3": c.fit.beta3, "beta4": c.fit.beta4,
        "residual_std": c.residual_std,
    } for c in reports], "correlation")


def _cmd_validate_ladder(args):
    manifest = load_encode_manifest(args.manifest)
    warnings = validate_rate_ladder(manifest, (args.band_low, args.band_high))
    _emit(args, [{"scene_id": w.scene_id, "kind": w.kind, "message": w.message}
                 for w in warnings], "ladder_warnings")
    print(f"{len(warnings)} warning(s)", file=sys.stderr)


def _cmd_report(args):
    manifest = RunManifest.load(args.run)
    bundle = run_pipeline(manifest)
    out_dir = Path(args.out or "report")
    written = bundle.write(out_dir)
    if args.figures:
        from .plots import render_figures
        written += render_figures(bundle, out_dir / "figures")
    print(f"report bundle: {len(written)} files under {out_dir}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vqeval",
                                     description="Codec quality evaluation toolkit")
    parser.add_argument("--seed", type=int, default=0, help="RNG seed where relevant")
    parser.add_argument("--out", help="output file or directory")
    parser.add_argument("--format", choices=("csv", "json"), default="json")
    # the same globals are accepted after the subcommand; SUPPRESS keeps the
    # subparser from overriding values parsed by the main parser
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--out", default=argparse.SUPPRESS)
    common.add_argument("--format", choices=("csv", "json"), default=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=lambda **kw: argparse.ArgumentParser(
                                    parents=[common], **kw))

    p = sub.add_parser("plan", help="build a session plan")
    p.add_argument("--scenes", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--sessions", type=int, default=3)
    p.add_argument("--clip-seconds", type=float, default=10.0)
    p.add_argument("--grey-seconds", type=float, default=3.0)
    p.add_argument("--vote-seconds", type=float, default=10.0)
    p.add_argument("--allow-adjacent-scenes", action="store_true")
    p.set_defaults(func=_cmd_plan)

    p = sub.add_parser("serve", help="run the vote-collection service")
    p.add_argument("--plan", required=True)
    p.add_argument("--port", type=int, default=8722)
    p.add_argument("--store", required=True)
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("metrics", help="full-reference metrics on raw video")
    p.add_argument("--ref", required=True)
    p.add_argument("--dist", required=True)
    p.add_argument("--meta", help="scene table csv")
    p.add_argument("--scene", help="scene_id within the table")
    p.add_argument("--metric", choices=("psnr", "ssim", "msssim"), required=True)
    p.add_argument("--pooling", choices=("frame", "global"), default="frame")
    p.add_argument("--per-frame", action="store_true")
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("siti", help="spatial/temporal information of a sequence")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--meta", help="scene table csv")
    p.add_argument("--scene")
    p.add_argument("--per-frame", action="store_true")
    p.set_defaults(func=_cmd_siti)

    p = sub.add_parser("ingest-vmaf", help="extract the score from a VMAF JSON log")
    p.add_argument("--log", required=True)
    p.set_defaults(func=_cmd_ingest_vmaf)

    for name, func, extra in (("screen", _cmd_screen, False),
                              ("dmos", _cmd_dmos, True)):
        p = sub.add_parser(name)
        p.add_argument("--votes", required=True)
        p.add_argument("--plan", required=True)
        if extra:
            p.add_argument("--no-bias-correction", action="store_true")
        p.set_defaults(func=func)

    p = sub.add_parser("ttest", help="pairwise significance for one scene")
    p.add_argument("--votes", required=True)
    p.add_argument("--plan", required=True)
    p.add_argument("--scene", required=True)
    p.add_argument("config_a", nargs="?")
    p.add_argument("config_b", nargs="?")
    p.add_argument("--no-bias-correction", action="store_true")
    p.set_defaults(func=_cmd_ttest)

    p = sub.add_parser("bd", help="Bjontegaard delta between two curves")
    p.add_argument("--anchor", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--mode", choices=("rate", "quality"), default="rate")
    p.add_argument("--limits", action="store_true",
                   help="also compute CI-bound limits (needs ci_half_width column)")
    p.set_defaults(func=_cmd_bd)

    p = sub.add_parser("correlate", help="metric-to-DMOS consistency indicators")
    p.add_argument("--dmos", required=True)
    p.add_argument("--metrics", required=True)
    p.add_argument("--plcc-raw", action="store_true")
    p.add_argument("--include-uncompressed", action="store_true")
    p.set_defaults(func=_cmd_correlate)

    p = sub.add_parser("validate-ladder", help="rate-ladder design checks")
    p.add_argument("--manifest", required=True)
    p.add_argument("--band-low", type=float, default=1.5)
    p.add_argument("--band-high", type=float, default=2.5)
    p.set_defaults(func=_cmd_validate_ladder)

    p = sub.add_parser("report", help="full pipeline: votes + metrics -> bundle")
    p.add_argument("--run", required=True, help="run manifest json")
    p.add_argument("--figures", dest="figures", action="store_true", default=True)
    p.add_argument("--no-figures", dest="figures", action="store_false")
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
