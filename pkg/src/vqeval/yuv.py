"""Raw planar 4:2:0 video input: bare YUV streams and the Y4M container.

8-bit samples are one byte each; 10-bit samples are stored little-endian in
two bytes and must stay below 1024. A Y4M header, when present, overrides
the caller-supplied scene metadata.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import BinaryIO, Iterator

import numpy as np

from .catalog import SceneMeta

_Y4M_MAGIC = b"YUV4MPEG2"
_ACCEPTED_CHROMA = {"420": 8, "420p10": 10}


@dataclass
class FramePlanar:
    """One decoded frame: full-resolution luma plus quarter-area chroma planes."""

    luma: np.ndarray
    chroma_b: np.ndarray
    chroma_r: np.ndarray
    bit_depth: int

    @property
    def width(self) -> int:
        return self.luma.shape[1]

    @property
    def height(self) -> int:
        return self.luma.shape[0]


def _frame_geometry(width: int, height: int, bit_depth: int):
    if width % 2 or height % 2:
        raise ValueError(f"4:2:0 requires even dimensions, got {width}x{height}")
    bytes_per_sample = 1 if bit_depth == 8 else 2
    n_luma = width * height
    n_chroma = (width // 2) * (height // 2)
    return bytes_per_sample, n_luma, n_chroma


def _decode_frame(payload: bytes, width: int, height: int, bit_depth: int) -> FramePlanar:
    bps, n_luma, n_chroma = _frame_geometry(width, height, bit_depth)
    dtype = np.uint8 if bit_depth == 8 else np.dtype("<u2")
    samples = np.frombuffer(payload, dtype=dtype)
    if bit_depth == 10 and samples.size and int(samples.max()) > 1023:
        raise ValueError(
            f"10-bit sample value {int(samples.max())} exceeds bit depth")
    luma = samples[:n_luma].reshape(height, width)
    cb = samples[n_luma:n_luma + n_chroma].reshape(height // 2, width // 2)
    cr = samples[n_luma + n_chroma:].reshape(height // 2, width // 2)
    return FramePlanar(luma, cb, cr, bit_depth)


def _read_raw_frames(stream: BinaryIO, width: int, height: int,
                     bit_depth: int) -> Iterator[FramePlanar]:
    bps, n_luma, n_chroma = _frame_geometry(width, height, bit_depth)
    frame_bytes = (n_luma + 2 * n_chroma) * bps
    index = 0
    while True:
        payload = stream.read(frame_bytes)
        if not payload:
            return
        if len(payload) < frame_bytes:
            raise ValueError(
                f"truncated frame {index}: got {len(payload)} of {frame_bytes} bytes")
        yield _decode_frame(payload, width, height, bit_depth)
        index += 1


def _parse_y4m_header(line: bytes):
    fields = line.decode("ascii", errors="replace").split()
    if not fields or fields[0] != _Y4M_MAGIC.decode():
        raise ValueError("not a Y4M stream")
    width = height = None
    fps = None
    chroma = "420"
    for token in fields[1:]:
        key, value = token[0], token[1:]
        if key == "W":
            width = int(value)
        elif key == "H":
            height = int(value)
        elif key == "F":
            num, _, den = value.partition(":")
            fps = int(num) / int(den or "1")
        elif key == "C":
            chroma = value
        # I (interlacing), A (aspect) and X (extensions) are irrelevant here
    if width is None or height is None:
        raise ValueError("Y4M header missing W or H")
    if chroma not in _ACCEPTED_CHROMA:
        raise ValueError(f"unsupported Y4M chroma mode C{chroma} (expected C420 or C420p10)")
    return width, height, fps, _ACCEPTED_CHROMA[chroma], chroma


def _read_y4m_frames(stream: BinaryIO, first_line: bytes,
                     meta: SceneMeta | None) -> Iterator[FramePlanar]:
    width, height, _fps, bit_depth, chroma = _parse_y4m_header(first_line)
    if meta is not None and meta.subsampling not in ("420", chroma):
        raise ValueError(
            f"Y4M chroma C{chroma} does not match declared subsampling {meta.subsampling!r}")
    bps, n_luma, n_chroma = _frame_geometry(width, height, bit_depth)
    frame_bytes = (n_luma + 2 * n_chroma) * bps
    index = 0
    while True:
        marker = _read_line(stream)
        if marker is None:
            return
        if not marker.startswith(b"FRAME"):
            raise ValueError(f"frame {index}: expected FRAME marker, got {marker[:16]!r}")
        payload = stream.read(frame_bytes)
        if len(payload) < frame_bytes:
            raise ValueError(
                f"truncated frame {index}: got {len(payload)} of {frame_bytes} bytes")
        yield _decode_frame(payload, width, height, bit_depth)
        index += 1


def _read_line(stream: BinaryIO) -> bytes | None:
    chunks = bytearray()
    while True:
        c = stream.read(1)
        if not c:
            return bytes(chunks) if chunks else None
        if c == b"\n":
            return bytes(chunks)
        chunks += c


def read_frames(stream: BinaryIO, meta: SceneMeta | None = None) -> Iterator[FramePlanar]:
    """Yield frames from a raw planar YUV 4:2:0 stream or a Y4M container.

    Raw streams need `meta` for geometry and bit depth; a Y4M header
    overrides it. Stops cleanly at end of stream, raises on a partial frame.
    """
    head = stream.read(len(_Y4M_MAGIC))
    if head == _Y4M_MAGIC:
        rest = _read_line(stream)
        if rest is None:
            raise ValueError("truncated Y4M header")
        yield from _read_y4m_frames(stream, _Y4M_MAGIC + rest, meta)
        return
    if meta is None:
        raise ValueError("raw YUV input requires scene metadata")

    class _Rewound:
        def __init__(self, prefix, inner):
            self._prefix = prefix
            self._inner = inner

        def read(self, n):
            if self._prefix:
                out = self._prefix[:n]
                self._prefix = self._prefix[n:]
                if len(out) < n:
                    out += self._inner.read(n - len(out))
                return out
            return self._inner.read(n)

    rewound = _Rewound(head, stream)
    yield from _read_raw_frames(rewound, meta.width, meta.height, meta.bit_depth)


def open_frames(path, meta: SceneMeta | None = None) -> Iterator[FramePlanar]:
    """read_frames over a file path (Y4M autodetected by extension-independent magic)."""
    with open(path, "rb") as fh:
        yield from read_frames(fh, meta)
