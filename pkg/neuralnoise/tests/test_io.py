import struct

import numpy as np
import pytest

from neuralnoise.io import (
    FileFormatError, read_matrix, read_wav, read_wav_mono, write_matrix, write_wav,
)


def test_wav_round_trip_is_exact(tmp_path):
    rng = np.random.default_rng(0)
    x = np.round(rng.uniform(-0.8, 0.8, 5000) * 32768) / 32768
    path = tmp_path / "a.wav"
    write_wav(path, x, 44100)
    y, rate = read_wav(path)
    assert rate == 44100
    assert np.array_equal(y.astype(np.float64), x)


def test_wav_write_clips_out_of_range(tmp_path):
    path = tmp_path / "clip.wav"
    write_wav(path, np.array([2.0, -2.0, 0.0]), 44100)
    y, _ = read_wav(path)
    assert y[0] == pytest.approx(32767 / 32768)
    assert y[1] == -1.0
    assert y[2] == 0.0


def test_stereo_read_and_downmix(tmp_path):
    # Interleave two channels by hand.
    left = np.array([0.5, -0.5, 0.25], dtype=np.float64)
    right = np.array([0.0, 0.5, -0.25], dtype=np.float64)
    ints = np.empty(6, dtype="<i2")
    ints[0::2] = (left * 32768).astype(np.int16)
    ints[1::2] = (right * 32768).astype(np.int16)
    payload = ints.tobytes()
    fmt = struct.pack("<HHIIHH", 1, 2, 44100, 44100 * 4, 4, 16)
    blob = b"".join([
        b"RIFF", struct.pack("<I", 4 + 8 + len(fmt) + 8 + len(payload)), b"WAVE",
        b"fmt ", struct.pack("<I", len(fmt)), fmt,
        b"data", struct.pack("<I", len(payload)), payload,
    ])
    path = tmp_path / "st.wav"
    path.write_bytes(blob)

    samples, rate = read_wav(path)
    assert samples.shape == (2, 3)
    mono, _ = read_wav_mono(path)
    assert np.allclose(mono, (left + right) / 2.0, atol=1e-4)


def test_wav_rejects_non_riff(tmp_path):
    path = tmp_path / "bad.wav"
    path.write_bytes(b"OggS" + b"\x00" * 100)
    with pytest.raises(FileFormatError):
        read_wav(path)


def test_wav_rejects_other_bit_depths(tmp_path):
    fmt = struct.pack("<HHIIHH", 1, 1, 44100, 44100 * 3, 3, 24)
    blob = b"".join([
        b"RIFF", struct.pack("<I", 4 + 8 + len(fmt) + 8), b"WAVE",
        b"fmt ", struct.pack("<I", len(fmt)), fmt,
        b"data", struct.pack("<I", 0),
    ])
    path = tmp_path / "deep.wav"
    path.write_bytes(blob)
    with pytest.raises(FileFormatError, match="16-bit"):
        read_wav(path)


def test_matrix_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    m = rng.random((7, 13)).astype(np.float32)
    path = tmp_path / "m.bin"
    write_matrix(path, m)
    assert np.array_equal(read_matrix(path), m)


def test_matrix_byte_layout(tmp_path):
    m = np.array([[1.0, 2.0], [3.0, 4.0]], dtype=np.float32)
    path = tmp_path / "m.bin"
    write_matrix(path, m)
    blob = path.read_bytes()
    assert len(blob) == 8 + 4 * 4
    assert struct.unpack("<II", blob[:8]) == (2, 2)
    assert blob[8:] == m.tobytes()


def test_matrix_truncation_errors(tmp_path):
    path = tmp_path / "m.bin"
    path.write_bytes(struct.pack("<II", 3, 3) + b"\x00" * 10)
    with pytest.raises(FileFormatError, match="data bytes"):
        read_matrix(path)
    path.write_bytes(b"\x00" * 5)
    with pytest.raises(FileFormatError, match="header"):
        read_matrix(path)


def test_matrix_rejects_non_2d(tmp_path):
    with pytest.raises(ValueError):
        write_matrix(tmp_path / "m.bin", np.zeros(5, dtype=np.float32))
