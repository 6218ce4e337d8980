import io

import numpy as np
import pytest

from vqeval.catalog import SceneMeta
from vqeval.yuv import read_frames


def _meta(width=2, height=2, bit_depth=8):
    return SceneMeta("S", width, height, 60.0, 10, bit_depth, "BT.709", "420")


def _raw_frame_8bit(width, height, fill=0x80):
    n = width * height + 2 * (width // 2) * (height // 2)
    return bytes([fill]) * n


class TestRawInput:
    def test_single_2x2_frame_is_six_bytes(self):
        frames = list(read_frames(io.BytesIO(bytes(range(6))), _meta()))
        assert len(frames) == 1
        frame = frames[0]
        assert frame.luma.tolist() == [[0, 1], [2, 3]]
        assert frame.chroma_b.tolist() == [[4]]
        assert frame.chroma_r.tolist() == [[5]]

    def test_truncated_frame(self):
        with pytest.raises(ValueError, match="truncated"):
            list(read_frames(io.BytesIO(bytes(7)), _meta()))

    def test_multiple_frames_clean_stop(self):
        stream = io.BytesIO(_raw_frame_8bit(2, 2) * 3)
        assert len(list(read_frames(stream, _meta()))) == 3

    def test_10bit_little_endian(self):
        samples = np.array([1023, 0, 512, 100, 7, 9], dtype="<u2")
        frames = list(read_frames(io.BytesIO(samples.tobytes()), _meta(bit_depth=10)))
        assert frames[0].luma.tolist() == [[1023, 0], [512, 100]]
        assert frames[0].bit_depth == 10

    def test_10bit_overflow_rejected(self):
        samples = np.array([1024, 0, 0, 0, 0, 0], dtype="<u2")
        with pytest.raises(ValueError, match="exceeds bit depth"):
            list(read_frames(io.BytesIO(samples.tobytes()), _meta(bit_depth=10)))

    def test_raw_needs_meta(self):
        with pytest.raises(ValueError, match="metadata"):
            list(read_frames(io.BytesIO(bytes(6))))


def _y4m_bytes(header: str, payloads: list[bytes]) -> bytes:
    body = b"".join(b"FRAME\n" + p for p in payloads)
    return header.encode() + b"\n" + body


class TestY4m:
    def test_8bit_round_trip(self):
        luma = np.arange(16 * 16, dtype=np.uint8).reshape(16, 16)
        chroma = np.full((8, 8), 100, dtype=np.uint8)
        payload = luma.tobytes() + chroma.tobytes() + chroma.tobytes()
        data = _y4m_bytes("YUV4MPEG2 W16 H16 F60:1 C420", [payload, payload])
        frames = list(read_frames(io.BytesIO(data)))
        assert len(frames) == 2
        assert frames[0].bit_depth == 8
        np.testing.assert_array_equal(frames[0].luma, luma)
        np.testing.assert_array_equal(frames[1].chroma_r, chroma)

    def test_10bit_header_overrides_meta(self):
        luma = np.full((16, 16), 700, dtype="<u2")
        chroma = np.full((8, 8), 300, dtype="<u2")
        payload = luma.tobytes() + chroma.tobytes() + chroma.tobytes()
        data = _y4m_bytes("YUV4MPEG2 W16 H16 F60:1 C420p10", [payload])
        frames = list(read_frames(io.BytesIO(data), _meta(width=4, height=4, bit_depth=8)))
        assert frames[0].bit_depth == 10
        assert frames[0].width == 16
        np.testing.assert_array_equal(frames[0].luma, luma.astype(np.uint16))

    def test_unsupported_chroma(self):
        data = _y4m_bytes("YUV4MPEG2 W16 H16 F60:1 C444", [])
        with pytest.raises(ValueError, match="C444"):
            list(read_frames(io.BytesIO(data)))

    def test_truncated_y4m_frame(self):
        data = _y4m_bytes("YUV4MPEG2 W16 H16 F60:1 C420", [bytes(10)])
        with pytest.raises(ValueError, match="truncated"):
            list(read_frames(io.BytesIO(data)))
