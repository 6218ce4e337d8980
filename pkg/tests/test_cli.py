import json
from pathlib import Path

import numpy as np
import pytest

from e2e_fixture import FIXTURES, build_run
from vqeval.cli import main


def run_cli(*argv):
    return main([str(a) for a in argv])


class TestPlanCommand:
    def test_plan_round_trip(self, tmp_path, capsys):
        out = tmp_path / "plan.json"
        code = run_cli("plan", "--scenes", FIXTURES / "table1_scenes.csv",
                       "--manifest", FIXTURES / "table2_manifest.csv",
                       "--sessions", "3", "--seed", "9", "--out", out)
        assert code == 0
        plan = json.loads(out.read_text())
        assert sum(len(s) for s in plan["sessions"]) == 60
        assert "60 BTCs" in capsys.readouterr().out


class TestMetricsCommands:
    def _write_y4m(self, path, frames):
        payload = b"YUV4MPEG2 W16 H16 F60:1 C420\n"
        for luma in frames:
            chroma = np.full((8, 8), 128, dtype=np.uint8)
            payload += b"FRAME\n" + luma.tobytes() + chroma.tobytes() * 2
        path.write_bytes(payload)

    def test_psnr_json(self, tmp_path, capsys):
        rng = np.random.default_rng(3)
        ref = [rng.integers(0, 255, (16, 16), dtype=np.uint8) for _ in range(2)]
        dist = [np.clip(f.astype(int) + 4, 0, 255).astype(np.uint8) for f in ref]
        self._write_y4m(tmp_path / "ref.y4m", ref)
        self._write_y4m(tmp_path / "dist.y4m", dist)
        code = run_cli("metrics", "--ref", tmp_path / "ref.y4m",
                       "--dist", tmp_path / "dist.y4m", "--metric", "psnr")
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["metric_id"] == "psnr"
        assert payload["frame_count"] == 2
        assert 30 < payload["aggregate"] < 50

    def test_siti(self, tmp_path, capsys):
        rng = np.random.default_rng(4)
        frames = [rng.integers(0, 255, (16, 16), dtype=np.uint8) for _ in range(3)]
        self._write_y4m(tmp_path / "in.y4m", frames)
        code = run_cli("siti", "--in", tmp_path / "in.y4m")
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["si"] > 0
        assert payload["ti"] > 0

    def test_ingest_vmaf(self, tmp_path, capsys):
        log = tmp_path / "vmaf.json"
        log.write_text(json.dumps({"pooled_metrics": {"vmaf": {"mean": 93.2}}}))
        code = run_cli("ingest-vmaf", "--log", log)
        assert code == 0
        assert json.loads(capsys.readouterr().out)["aggregate"] == 93.2


class TestAnalysisCommands:
    def test_bd_command(self, tmp_path, capsys):
        anchor = tmp_path / "anchor.csv"
        test = tmp_path / "test.csv"
        anchor.write_text("label,metric_id,rate_mbps,quality\n"
                          "a,psnr,2,30\na,psnr,4,34\na,psnr,8,38\na,psnr,16,41\n")
        test.write_text("label,metric_id,rate_mbps,quality\n"
                        "t,psnr,1,30\nt,psnr,2,34\nt,psnr,4,38\nt,psnr,8,41\n")
        code = run_cli("bd", "--anchor", anchor, "--test", test, "--mode", "rate")
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["bd_rate_percent"] == pytest.approx(-50.0, abs=1e-9)

    def test_validate_ladder_clean_fixture(self, capsys):
        code = run_cli("validate-ladder", "--manifest",
                       FIXTURES / "table2_manifest.csv")
        assert code == 0
        out = capsys.readouterr()
        assert json.loads(out.out) == []
        assert "0 warning(s)" in out.err

    def test_dmos_and_screen(self, tmp_path, capsys):
        run_path = build_run(tmp_path)
        code = run_cli("screen", "--votes", tmp_path / "votes.csv",
                       "--plan", tmp_path / "plan.json")
        assert code == 0
        diagnostics = json.loads(capsys.readouterr().out)
        assert len(diagnostics) == 22
        code = run_cli("dmos", "--votes", tmp_path / "votes.csv",
                       "--plan", tmp_path / "plan.json")
        assert code == 0
        rows = json.loads(capsys.readouterr().out)
        assert len(rows) == 60

    def test_ttest_pair(self, tmp_path, capsys):
        build_run(tmp_path)
        code = run_cli("ttest", "--votes", tmp_path / "votes.csv",
                       "--plan", tmp_path / "plan.json",
                       "--scene", "LayeredKimono", "HEVC_R1", "VVC_R4")
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["p"] < 0.05

    def test_report_command(self, tmp_path, capsys):
        run_path = build_run(tmp_path)
        out_dir = tmp_path / "bundle"
        code = run_cli("report", "--run", run_path, "--out", out_dir, "--no-figures")
        assert code == 0
        assert (out_dir / "dmos.csv").exists()
        assert (out_dir / "significance" / "SteelPlant.csv").exists()
        grid = (out_dir / "significance" / "SteelPlant.csv").read_text().splitlines()
        assert grid[0] == "config,VVC_R1,VVC_R2,VVC_R3,VVC_R4,4K,REF"
        assert len(grid) == 7

    def test_error_reported_cleanly(self, tmp_path, capsys):
        code = run_cli("validate-ladder", "--manifest", tmp_path / "nope.csv")
        assert code == 1
        assert "error:" in capsys.readouterr().err
