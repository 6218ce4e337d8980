"""Codec quality evaluation toolkit.

Objective metrics on raw video, DSCQS subjective-test planning and
statistics, Bjontegaard deltas (including DMOS confidence-limit variants)
and objective-metric correlation reporting.
"""

from .bd import (BdResult, RdCurve, RdPoint, bd_quality, bd_quality_limits,
                 bd_rate, bd_rate_limits, fit_cubic)
from .catalog import (ConfigId, EncodeManifest, LadderWarning, Pvs, SceneMeta,
                      build_pvs_catalog, load_encode_manifest, load_scene_table,
                      scene_configs, validate_rate_ladder)
from .correlation import (CorrelationReport, LogisticParams, correlation_report,
                          fit_logistic, krocc, plcc_rmse, srocc)
from .metrics import (SequenceMetricResult, ms_ssim_frame, ms_ssim_luma,
                      psnr_luma, sequence_metric, ssim_luma)
from .pipeline import ReportBundle, RunManifest, emit_plots, run_pipeline
from .session import (Btc, BtcTiming, SessionPlan, export_votes, import_votes,
                      plan_sessions, scale_to_score)
from .siti import SitiResult, si_ti
from .subjective import (DmosResult, ScoreMatrix, TTestResult, VoteRecord,
                         differential_scores, dmos, remove_bias, screen_observers,
                         significance_matrix, welch_t_test)
from .vmaf import ingest_vmaf_log
from .yuv import FramePlanar, read_frames

__version__ = "0.1.0"
