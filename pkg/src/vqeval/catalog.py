"""Scene metadata, QP/bitrate ladders and the per-scene stimulus (PVS) grid.

The catalog pins down what gets evaluated: each scene yields ten processed
video sequences (an 8K hidden reference, a 4K round-trip, and two codecs at
four rate points each), with QP/bitrate taken from an encode manifest.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

CODECS = ("HEVC", "VVC")
RATE_INDICES = (1, 2, 3, 4)

REFERENCE = "reference"
DOWNSCALED_4K = "downscaled4k"
CODED = "coded"

SCENE_COLUMNS = ("scene_id", "width", "height", "fps", "frames",
                 "bit_depth", "color_space", "subsampling")
MANIFEST_COLUMNS = ("scene_id", "codec", "rate_index", "qp", "bitrate_mbps")


@dataclass(frozen=True)
class SceneMeta:
    """One raw test sequence as listed in the scene table."""

    scene_id: str
    width: int
    height: int
    fps: float
    frame_count: int
    bit_depth: int
    color_space: str
    subsampling: str

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"scene {self.scene_id!r}: width/height must be positive")
        if self.bit_depth not in (8, 10):
            raise ValueError(
                f"scene {self.scene_id!r}: bit_depth must be 8 or 10, got {self.bit_depth}")
        if self.frame_count < 1:
            raise ValueError(f"scene {self.scene_id!r}: frame_count must be >= 1")
        if self.fps <= 0:
            raise ValueError(f"scene {self.scene_id!r}: fps must be positive")


@dataclass(frozen=True, order=True)
class ConfigId:
    """Identity of one stimulus configuration within a scene.

    Exactly ten exist per scene: REF, 4K, and codec x rate_index for the
    two codecs and four rate points.
    """

    variant: str
    codec: str | None = None
    rate_index: int | None = None

    def __post_init__(self):
        if self.variant not in (REFERENCE, DOWNSCALED_4K, CODED):
            raise ValueError(f"unknown config variant {self.variant!r}")
        if self.variant == CODED:
            if not self.codec:
                raise ValueError("coded config requires a codec")
            if self.rate_index not in RATE_INDICES:
                raise ValueError(f"rate_index must be in {RATE_INDICES}, got {self.rate_index}")
        elif self.codec is not None or self.rate_index is not None:
            raise ValueError(f"{self.variant} config must not carry codec/rate_index")

    @property
    def label(self) -> str:
        if self.variant == REFERENCE:
            return "REF"
        if self.variant == DOWNSCALED_4K:
            return "4K"
        return f"{self.codec}_R{self.rate_index}"

    @property
    def is_coded(self) -> bool:
        return self.variant == CODED

    @classmethod
    def reference(cls) -> "ConfigId":
        return cls(REFERENCE)

    @classmethod
    def downscaled_4k(cls) -> "ConfigId":
        return cls(DOWNSCALED_4K)

    @classmethod
    def coded(cls, codec: str, rate_index: int) -> "ConfigId":
        return cls(CODED, codec, rate_index)

    @classmethod
    def parse(cls, label: str) -> "ConfigId":
        if label == "REF":
            return cls.reference()
        if label == "4K":
            return cls.downscaled_4k()
        codec, _, rate = label.partition("_R")
        if codec and rate.isdigit():
            return cls.coded(codec, int(rate))
        raise ValueError(f"unrecognized config label {label!r}")


def scene_configs() -> list[ConfigId]:
    """The ten configurations evaluated for every scene, in canonical order."""
    configs = [ConfigId.reference(), ConfigId.downscaled_4k()]
    for codec in CODECS:
        for ri in RATE_INDICES:
            configs.append(ConfigId.coded(codec, ri))
    return configs


@dataclass(frozen=True)
class ManifestRow:
    scene_id: str
    codec: str
    rate_index: int
    qp: int
    bitrate_mbps: float

    def __post_init__(self):
        if self.qp < 0:
            raise ValueError(f"{self.scene_id}/{self.codec}: qp must be >= 0")
        if self.bitrate_mbps <= 0:
            raise ValueError(f"{self.scene_id}/{self.codec}: bitrate must be > 0")
        if self.rate_index not in RATE_INDICES:
            raise ValueError(
                f"{self.scene_id}/{self.codec}: rate_index must be in {RATE_INDICES}")


class EncodeManifest:
    """QP/bitrate rows keyed by (scene, codec, rate_index).

    Bitrate must be strictly increasing in rate_index within each
    (scene, codec) ladder, matching the rate-ladder design.
    """

    def __init__(self, rows: list[ManifestRow]):
        index: dict[tuple[str, str, int], ManifestRow] = {}
        for row in rows:
            key = (row.scene_id, row.codec, row.rate_index)
            if key in index:
                raise ValueError(
                    f"duplicate manifest row for {row.scene_id}/{row.codec}/R{row.rate_index}")
            index[key] = row
        self.rows = list(rows)
        self._index = index
        for scene_id, codec in {(r.scene_id, r.codec) for r in rows}:
            ladder = self.ladder(scene_id, codec)
            rates = [r.bitrate_mbps for r in ladder]
            if any(b >= a for a, b in zip(rates[1:], rates)):
                raise ValueError(
                    f"non-monotone bitrate ladder for {scene_id}/{codec}: {rates}")

    def __eq__(self, other):
        return isinstance(other, EncodeManifest) and self._index == other._index

    def row(self, scene_id: str, codec: str, rate_index: int) -> ManifestRow:
        return self._index[(scene_id, codec, rate_index)]

    def get(self, scene_id: str, codec: str, rate_index: int) -> ManifestRow | None:
        return self._index.get((scene_id, codec, rate_index))

    def ladder(self, scene_id: str, codec: str) -> list[ManifestRow]:
        rows = [r for r in self.rows if r.scene_id == scene_id and r.codec == codec]
        return sorted(rows, key=lambda r: r.rate_index)

    def scene_ids(self) -> list[str]:
        return sorted({r.scene_id for r in self.rows})


@dataclass(frozen=True)
class Pvs:
    """One processed video sequence: a (scene, configuration) stimulus."""

    scene_id: str
    config: ConfigId
    qp: int | None = None
    bitrate_mbps: float | None = None
    media_uri: str | None = None

    def __post_init__(self):
        if self.config.is_coded:
            if self.qp is None or self.bitrate_mbps is None:
                raise ValueError(
                    f"{self.scene_id}/{self.config.label}: coded PVS requires qp and bitrate")
        elif self.qp is not None or self.bitrate_mbps is not None:
            raise ValueError(
                f"{self.scene_id}/{self.config.label}: qp/bitrate only valid for coded PVS")


@dataclass(frozen=True)
class LadderWarning:
    scene_id: str
    kind: str  # "ratio" or "cross_codec"
    message: str


def _read_rows(path: str | Path, columns: tuple[str, ...]) -> list[tuple[int, list[str]]]:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        rows = [(lineno, row) for lineno, row in enumerate(reader, start=1)
                if row and any(cell.strip() for cell in row)]
    if not rows:
        return []
    header_line, header = rows[0]
    if [c.strip() for c in header] != list(columns):
        raise ValueError(
            f"{path}:{header_line}: expected header {','.join(columns)}, "
            f"got {','.join(header)}")
    return rows[1:]


def _field(path, lineno, row, columns, name, conv):
    pos = columns.index(name)
    if pos >= len(row):
        raise ValueError(f"{path}:{lineno}: missing field {name!r}")
    raw = row[pos].strip()
    try:
        return conv(raw)
    except ValueError:
        raise ValueError(f"{path}:{lineno}: field {name!r}: cannot parse {raw!r}") from None


def load_scene_table(path: str | Path) -> list[SceneMeta]:
    """Load the scene table (csv columns: scene_id,...,subsampling)."""
    scenes = []
    for lineno, row in _read_rows(path, SCENE_COLUMNS):
        f = lambda name, conv: _field(path, lineno, row, SCENE_COLUMNS, name, conv)
        try:
            scenes.append(SceneMeta(
                scene_id=f("scene_id", str),
                width=f("width", int),
                height=f("height", int),
                fps=f("fps", float),
                frame_count=f("frames", int),
                bit_depth=f("bit_depth", int),
                color_space=f("color_space", str),
                subsampling=f("subsampling", str),
            ))
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
    return scenes


def load_encode_manifest(path: str | Path) -> EncodeManifest:
    """Load the encode manifest (csv columns: scene_id,codec,rate_index,qp,bitrate_mbps)."""
    rows = []
    for lineno, row in _read_rows(path, MANIFEST_COLUMNS):
        f = lambda name, conv: _field(path, lineno, row, MANIFEST_COLUMNS, name, conv)
        try:
            rows.append(ManifestRow(
                scene_id=f("scene_id", str),
                codec=f("codec", str),
                rate_index=f("rate_index", int),
                qp=f("qp", int),
                bitrate_mbps=f("bitrate_mbps", float),
            ))
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
    return EncodeManifest(rows)


def save_scene_table(scenes: list[SceneMeta], path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SCENE_COLUMNS)
        for s in scenes:
            w.writerow([s.scene_id, s.width, s.height, _num(s.fps), s.frame_count,
                        s.bit_depth, s.color_space, s.subsampling])


def save_encode_manifest(manifest: EncodeManifest, path: str | Path) -> None:
    rows = sorted(manifest.rows, key=lambda r: (r.scene_id, r.codec, r.rate_index))
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MANIFEST_COLUMNS)
        for r in rows:
            w.writerow([r.scene_id, r.codec, r.rate_index, r.qp, _num(r.bitrate_mbps)])


def _num(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def build_pvs_catalog(scenes: list[SceneMeta], manifest: EncodeManifest) -> list[Pvs]:
    """Expand scenes into the full PVS grid (10 per scene), or fail listing gaps."""
    catalog: list[Pvs] = []
    for scene in scenes:
        missing = [(codec, ri) for codec in CODECS for ri in RATE_INDICES
                   if manifest.get(scene.scene_id, codec, ri) is None]
        if missing:
            gaps = ", ".join(f"{c}/R{ri}" for c, ri in missing)
            raise ValueError(f"scene {scene.scene_id!r}: manifest missing {gaps}")
        for config in scene_configs():
            if config.is_coded:
                row = manifest.row(scene.scene_id, config.codec, config.rate_index)
                catalog.append(Pvs(scene.scene_id, config,
                                   qp=row.qp, bitrate_mbps=row.bitrate_mbps))
            else:
                catalog.append(Pvs(scene.scene_id, config))
    return catalog


def validate_rate_ladder(manifest: EncodeManifest,
                         ratio_band: tuple[float, float] = (1.5, 2.5),
                         cross_codec_tolerance: float = 0.15) -> list[LadderWarning]:
    """Check rate-ladder design rules, returning warnings (never raising).

    Each consecutive bitrate pair should sit within ratio_band (the ladder
    roughly doubles per step), and the two codecs' ladders should match
    rate-for-rate within cross_codec_tolerance (relative).
    """
    low, high = ratio_band
    warnings: list[LadderWarning] = []
    for scene_id in manifest.scene_ids():
        for codec in CODECS:
            ladder = manifest.ladder(scene_id, codec)
            for prev, nxt in zip(ladder, ladder[1:]):
                ratio = nxt.bitrate_mbps / prev.bitrate_mbps
                if not (low <= ratio <= high):
                    warnings.append(LadderWarning(
                        scene_id, "ratio",
                        f"{codec} R{prev.rate_index}->R{nxt.rate_index}: "
                        f"ratio {ratio:.3f} outside [{low}, {high}]"))
        for ri in RATE_INDICES:
            rows = [manifest.get(scene_id, codec, ri) for codec in CODECS]
            if any(r is None for r in rows):
                continue
            a, b = rows[0].bitrate_mbps, rows[1].bitrate_mbps
            rel = abs(a - b) / max(a, b)
            if rel > cross_codec_tolerance:
                warnings.append(LadderWarning(
                    scene_id, "cross_codec",
                    f"R{ri}: {CODECS[0]} {a} vs {CODECS[1]} {b} Mbps "
                    f"differ by {rel:.1%} (> {cross_codec_tolerance:.0%})"))
    return warnings
