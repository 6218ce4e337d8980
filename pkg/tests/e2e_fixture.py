"""Synthetic full-scale run fixture: 6 scenes, 22 observers, 3 sessions.

Votes follow a simple latent-quality model (quality rising with rate index,
the second codec a step above the first, 4K slightly below the hidden
reference) plus per-observer bias and noise, so the whole analysis chain
has realistic structure while staying deterministic.
"""

from __future__ import annotations

import json
import math
import shutil
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from vqeval.catalog import build_pvs_catalog, load_encode_manifest, load_scene_table
from vqeval.session import SessionPlan, append_vote, plan_sessions
from vqeval.subjective import VoteRecord

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

T0 = datetime(2024, 5, 1, 9, 0, 0, tzinfo=timezone.utc)

SCENE_DIFFICULTY = {
    "BodeMuseum": 0.0, "OberbaumSpree": 2.0, "LayeredKimono": -2.0,
    "Festival2": 4.0, "JapaneseMaple": 6.0, "SteelPlant": 8.0,
}


def latent_quality(scene_id: str, config) -> float:
    """Mean perceived quality (0-100 scale) of one stimulus: saturating in
    rate index, the second codec a constant step ahead."""
    if config.label == "REF":
        return 85.0
    if config.label == "4K":
        return 78.0 - SCENE_DIFFICULTY.get(scene_id, 0.0) * 0.3
    base = 88.0 - 52.0 * math.exp(-0.52 * config.rate_index)
    base -= SCENE_DIFFICULTY.get(scene_id, 0.0)
    if config.codec == "VVC":
        base += 5.0
    return base


def build_run(tmp_path: Path, seed: int = 20240501, n_observers: int = 22) -> Path:
    """Materialize scene table, manifest, plan, votes, metric table and the
    run manifest under tmp_path; returns the run manifest path."""
    rng = np.random.default_rng(seed)
    scene_table = tmp_path / "scenes.csv"
    manifest_csv = tmp_path / "manifest.csv"
    shutil.copy(FIXTURES / "table1_scenes.csv", scene_table)
    shutil.copy(FIXTURES / "table2_manifest.csv", manifest_csv)

    scenes = load_scene_table(scene_table)
    manifest = load_encode_manifest(manifest_csv)
    catalog = build_pvs_catalog(scenes, manifest)
    plan = plan_sessions(catalog, n_sessions=3, seed=seed)
    plan_path = tmp_path / "plan.json"
    plan.save(plan_path)

    vote_log = tmp_path / "votes.csv"
    biases = rng.normal(0, 3, size=n_observers)
    for o in range(n_observers):
        observer_id = f"obs{o:02d}"
        for btc in plan.all_btcs():
            ref_score = np.clip(85.0 + biases[o] + rng.normal(0, 4), 0, 100)
            test_mean = latent_quality(btc.scene_id, btc.config)
            if btc.config.label == "REF":
                test_score = np.clip(ref_score + rng.normal(0, 2), 0, 100)
            else:
                test_score = np.clip(test_mean + biases[o] + rng.normal(0, 4), 0, 100)
            score_a, score_b = ((ref_score, test_score) if btc.a_is_reference
                                else (test_score, ref_score))
            append_vote(vote_log, VoteRecord(observer_id, btc.btc_index,
                                             float(score_a), float(score_b), T0))

    metric_path = tmp_path / "metrics.csv"
    lines = ["scene_id,config,metric_id,value"]
    transforms = {
        "psnr": lambda q: 28.0 + q * 0.14,
        "msssim": lambda q: 0.95 + q * 0.0005,
        "vmaf": lambda q: q * 1.05 - 5.0,
    }
    for metric_id, transform in transforms.items():
        for pvs in catalog:
            if not pvs.config.is_coded:
                continue
            q = latent_quality(pvs.scene_id, pvs.config)
            jitter = float(rng.normal(0, 0.02)) * q
            lines.append(f"{pvs.scene_id},{pvs.config.label},{metric_id},"
                         f"{transform(q + jitter):.6f}")
    metric_path.write_text("\n".join(lines) + "\n")

    run_path = tmp_path / "run.json"
    run_path.write_text(json.dumps({
        "scene_table": "scenes.csv",
        "encode_manifest": "manifest.csv",
        "session_plan": "plan.json",
        "vote_log": "votes.csv",
        "metric_table": "metrics.csv",
        "bias_correction": True,
    }, indent=2))
    return run_path
