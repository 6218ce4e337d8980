"""Ingestion of VMAF JSON logs produced by the external VMAF tool.

Only the score is consumed here: the pooled mean when the log carries one,
otherwise the arithmetic mean of the per-frame values.
"""

from __future__ import annotations

import json
from pathlib import Path


def ingest_vmaf_log(path: str | Path) -> float:
    with Path(path).open() as fh:
        try:
            log = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: not valid JSON: {exc}") from None
    if not isinstance(log, dict):
        raise ValueError(f"{path}: expected a JSON object at top level")

    pooled = log.get("pooled_metrics", {})
    if isinstance(pooled, dict) and "vmaf" in pooled:
        mean = pooled["vmaf"].get("mean")
        if not isinstance(mean, (int, float)):
            raise ValueError(f"{path}: pooled_metrics.vmaf.mean is malformed")
        return float(mean)

    frames = log.get("frames")
    if isinstance(frames, list) and frames:
        values = []
        for i, frame in enumerate(frames):
            score = frame.get("metrics", {}).get("vmaf") if isinstance(frame, dict) else None
            if not isinstance(score, (int, float)):
                raise ValueError(f"{path}: frame {i} has no vmaf score")
            values.append(float(score))
        return sum(values) / len(values)

    raise ValueError(f"{path}: no vmaf fields found (pooled_metrics or frames)")
