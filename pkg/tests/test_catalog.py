import math
from pathlib import Path

import pytest

from vqeval.catalog import (ConfigId, EncodeManifest, ManifestRow, SceneMeta,
                            build_pvs_catalog, load_encode_manifest,
                            load_scene_table, save_encode_manifest,
                            scene_configs, validate_rate_ladder)

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def _scene(scene_id="S", frames=300, bit_depth=10):
    return SceneMeta(scene_id, 7680, 4320, 60.0, frames, bit_depth, "BT.2020", "420")


def _full_manifest(scene_ids=("S",)):
    rows = []
    for scene_id in scene_ids:
        for codec in ("HEVC", "VVC"):
            for ri, (qp, rate) in enumerate([(38, 2.0), (34, 4.0), (29, 8.0), (26, 16.0)],
                                            start=1):
                rows.append(ManifestRow(scene_id, codec, ri, qp, rate))
    return EncodeManifest(rows)


class TestSceneTable:
    def test_row_parses(self, tmp_path):
        table = tmp_path / "scenes.csv"
        table.write_text("scene_id,width,height,fps,frames,bit_depth,color_space,subsampling\n"
                         "LayeredKimono,7680,4320,60,300,10,BT.2020,420\n")
        scenes = load_scene_table(table)
        assert len(scenes) == 1
        assert scenes[0].frame_count == 300
        assert scenes[0].bit_depth == 10

    def test_empty_file(self, tmp_path):
        table = tmp_path / "scenes.csv"
        table.write_text("")
        assert load_scene_table(table) == []

    def test_bad_bit_depth(self, tmp_path):
        table = tmp_path / "scenes.csv"
        table.write_text("scene_id,width,height,fps,frames,bit_depth,color_space,subsampling\n"
                         "X,7680,4320,60,300,12,BT.2020,420\n")
        with pytest.raises(ValueError, match="bit_depth"):
            load_scene_table(table)

    def test_parse_error_names_line(self, tmp_path):
        table = tmp_path / "scenes.csv"
        table.write_text("scene_id,width,height,fps,frames,bit_depth,color_space,subsampling\n"
                         "X,notanumber,4320,60,300,10,BT.2020,420\n")
        with pytest.raises(ValueError, match=r":2.*width"):
            load_scene_table(table)


class TestConfigId:
    def test_ten_configs_per_scene(self):
        configs = scene_configs()
        assert len(configs) == 10
        assert len(set(configs)) == 10
        labels = [c.label for c in configs]
        assert "REF" in labels and "4K" in labels
        assert sum(1 for c in configs if c.is_coded) == 8

    def test_label_round_trip(self):
        for config in scene_configs():
            assert ConfigId.parse(config.label) == config

    def test_coded_requires_rate_index(self):
        with pytest.raises(ValueError):
            ConfigId("coded", "HEVC", 5)
        with pytest.raises(ValueError):
            ConfigId("reference", codec="HEVC")


class TestManifest:
    def test_published_ladder_accepted(self):
        manifest = load_encode_manifest(FIXTURES / "table2_manifest.csv")
        ladder = manifest.ladder("LayeredKimono", "HEVC")
        assert [(r.qp, r.bitrate_mbps) for r in ladder] == \
            [(38, 1.9), (34, 3.2), (29, 6.3), (26, 11.4)]

    def test_duplicate_rate_index(self):
        rows = [ManifestRow("S", "HEVC", 2, 30, 4.0), ManifestRow("S", "HEVC", 2, 31, 5.0)]
        with pytest.raises(ValueError, match="duplicate"):
            EncodeManifest(rows)

    def test_non_monotone_bitrate(self):
        rows = [ManifestRow("S", "HEVC", i + 1, 30, rate)
                for i, rate in enumerate([5.0, 4.0, 8.0, 9.0])]
        with pytest.raises(ValueError, match="non-monotone"):
            EncodeManifest(rows)

    def test_save_load_round_trip(self, tmp_path):
        manifest = load_encode_manifest(FIXTURES / "table2_manifest.csv")
        out = tmp_path / "manifest.csv"
        save_encode_manifest(manifest, out)
        assert load_encode_manifest(out) == manifest


class TestPvsCatalog:
    def test_six_scenes_yield_sixty(self):
        scenes = [_scene(f"S{i}") for i in range(6)]
        manifest = _full_manifest([s.scene_id for s in scenes])
        catalog = build_pvs_catalog(scenes, manifest)
        assert len(catalog) == 60

    def test_single_scene_yields_ten(self):
        catalog = build_pvs_catalog([_scene()], _full_manifest())
        assert len(catalog) == 10

    def test_catalog_scales_with_scenes(self):
        for n in (1, 2, 4):
            scenes = [_scene(f"S{i}") for i in range(n)]
            manifest = _full_manifest([s.scene_id for s in scenes])
            assert len(build_pvs_catalog(scenes, manifest)) == 10 * n

    def test_coded_pvs_matches_manifest(self):
        manifest = _full_manifest()
        catalog = build_pvs_catalog([_scene()], manifest)
        for pvs in catalog:
            if pvs.config.is_coded:
                row = manifest.row(pvs.scene_id, pvs.config.codec, pvs.config.rate_index)
                assert pvs.qp == row.qp
                assert pvs.bitrate_mbps == row.bitrate_mbps
            else:
                assert pvs.qp is None and pvs.bitrate_mbps is None

    def test_missing_codec_rows_listed(self):
        rows = [r for r in _full_manifest().rows if r.codec == "HEVC"]
        with pytest.raises(ValueError, match=r"VVC/R1.*VVC/R2.*VVC/R3.*VVC/R4"):
            build_pvs_catalog([_scene()], EncodeManifest(rows))


class TestRateLadder:
    def test_published_ladders_within_band(self):
        manifest = load_encode_manifest(FIXTURES / "table2_manifest.csv")
        assert validate_rate_ladder(manifest, (1.5, 2.5)) == []

    def test_published_ratio_values(self):
        ladder = [1.9, 3.2, 6.3, 11.4]
        ratios = [b / a for a, b in zip(ladder, ladder[1:])]
        assert ratios == pytest.approx([1.684, 1.969, 1.810], abs=5e-3)
        assert all(1.5 <= r <= 2.5 for r in ratios)

    def test_exact_doubling_passes(self):
        rows = [ManifestRow("S", "HEVC", i + 1, 30, float(2 ** i)) for i in range(4)]
        rows += [ManifestRow("S", "VVC", i + 1, 30, float(2 ** i)) for i in range(4)]
        assert validate_rate_ladder(EncodeManifest(rows)) == []

    def test_flat_step_warns(self):
        # 1 -> 1.1 is below the band; 1.1 -> 4 lands above it as a side effect
        rows = [ManifestRow("S", "HEVC", i + 1, 30, rate)
                for i, rate in enumerate([1.0, 1.1, 4.0, 8.0])]
        warnings = validate_rate_ladder(EncodeManifest(rows), (1.5, 2.5))
        assert all(w.kind == "ratio" for w in warnings)
        assert any("R1->R2" in w.message for w in warnings)
        assert not any("R3->R4" in w.message for w in warnings)

    def test_cross_codec_mismatch_warns(self):
        rows = [ManifestRow("S", "HEVC", i + 1, 30, float(2 ** i)) for i in range(4)]
        rows += [ManifestRow("S", "VVC", i + 1, 30, float(2 ** i) * 1.3) for i in range(4)]
        warnings = validate_rate_ladder(EncodeManifest(rows))
        assert {w.kind for w in warnings} == {"cross_codec"}
        assert len(warnings) == 4
