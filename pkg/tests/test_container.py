import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from psycodec import codec
from psycodec.container import (StreamHeader, header_size, read_stream,
                                read_wav, write_stream, write_wav)
from psycodec.errors import (CrcMismatchError, TruncatedStreamError,
                             VersionError, WavFormatError)
from psycodec.psycho import MaskingParams, build_masking


def _example_stream(n=6000, fs=8000, noisy=False):
    t = np.arange(n) / fs
    x = 800.0 * np.sin(2 * np.pi * 500 * t) * np.hanning(n)
    params = MaskingParams(a_t=0.02, a_f=120.0, window_width_a=0.008)
    model = build_masking(x, fs, params)
    cfg = codec.EncodeConfig(chunk_size=512)
    if noisy:
        return x, codec.encode_noisy(x, model, cfg)
    return x, codec.encode(x, model, cfg)


def test_header_roundtrip():
    h = StreamHeader(sample_rate=44100, num_samples=123456, chunk_size=1024,
                     alpha=0.1, a_t=0.02, a_f=100.0, window_a=0.01,
                     lock_variant=2, flags=1, seed=99)
    h.key_length = 77
    h.payload_length = 888
    buf = h.pack()
    assert len(buf) == header_size()
    h2 = StreamHeader.unpack(buf)
    assert h2.pack() == buf  # float fields are 32-bit on the wire
    assert (h2.sample_rate, h2.num_samples, h2.chunk_size) == (44100, 123456, 1024)
    assert h2.alpha == pytest.approx(0.1)
    assert (h2.lock_variant, h2.flags, h2.seed) == (2, 1, 99)


def test_stream_roundtrip_structural():
    x, stream = _example_stream()
    blob = write_stream(stream)
    s2 = read_stream(blob)
    assert s2.header.pack() == stream.header.pack()
    assert s2.key.to_bytes() == stream.key.to_bytes()
    assert s2.payload == stream.payload
    assert np.array_equal(codec.decode(s2), codec.decode(stream))


def test_noisy_stream_empty_payload_roundtrips():
    x, stream = _example_stream(noisy=True)
    blob = write_stream(stream)
    s2 = read_stream(blob)
    assert s2.payload == b""
    assert s2.header.flags & 0x01
    assert np.array_equal(codec.decode(s2), codec.decode(stream))


def test_header_corruption_detected():
    x, stream = _example_stream()
    blob = bytearray(write_stream(stream))
    blob[10] ^= 0xFF
    with pytest.raises(CrcMismatchError):
        read_stream(bytes(blob))


def test_bad_magic_and_version():
    x, stream = _example_stream()
    blob = bytearray(write_stream(stream))
    good = bytes(blob)
    blob[0] = ord(b"X")
    with pytest.raises(VersionError, match="magic"):
        read_stream(bytes(blob))
    blob2 = bytearray(good)
    blob2[4] = 99  # version byte; CRC must flag it before version parsing
    with pytest.raises((VersionError, CrcMismatchError)):
        read_stream(bytes(blob2))


def test_truncation_detected():
    x, stream = _example_stream()
    blob = write_stream(stream)
    with pytest.raises(TruncatedStreamError):
        read_stream(blob[: len(blob) - 20])
    with pytest.raises(TruncatedStreamError):
        read_stream(blob[:30])


def test_wav_roundtrip_random_int16(tmp_path):
    rng = np.random.default_rng(0)
    x = rng.integers(-32768, 32767, size=10000).astype(np.float64)
    p = tmp_path / "x.wav"
    write_wav(x, 44100, p)
    y, rate = read_wav(p)
    assert rate == 44100
    assert np.array_equal(x, y)


def test_wav_full_scale_sine_bit_exact(tmp_path):
    n = 8000
    x = np.rint(32767.0 * np.sin(2 * np.pi * 440 * np.arange(n) / 8000.0))
    p = tmp_path / "s.wav"
    write_wav(x, 8000, p)
    y, _ = read_wav(p)
    assert np.array_equal(x, y)


def test_wav_rejects_stereo_and_24bit(tmp_path):
    import wave

    p = tmp_path / "stereo.wav"
    with wave.open(str(p), "wb") as w:
        w.setnchannels(2)
        w.setsampwidth(2)
        w.setframerate(8000)
        w.writeframes(b"\x00" * 400)
    with pytest.raises(WavFormatError, match="mono"):
        read_wav(p)

    p24 = tmp_path / "deep.wav"
    with wave.open(str(p24), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(3)
        w.setframerate(8000)
        w.writeframes(b"\x00" * 300)
    with pytest.raises(WavFormatError, match="24-bit"):
        read_wav(p24)


def test_golden_stream_decodes_identically():
    """A checked-in stream must parse and decode to the recorded digest."""
    import hashlib
    import json

    golden_dir = Path(__file__).parent / "golden"
    blob = (golden_dir / "tone.psc").read_bytes()
    expected = json.loads((golden_dir / "tone.json").read_text())
    stream = read_stream(blob)
    out = codec.decode(stream)
    digest = hashlib.sha256(
        np.clip(np.rint(out), -32768, 32767).astype("<i2").tobytes()
    ).hexdigest()
    assert digest == expected["decoded_sha256"]
    assert hashlib.sha256(blob).hexdigest() == expected["stream_sha256"]


def test_cross_process_decode_matches(tmp_path):
    """A stream written here decodes byte-identically in a fresh process."""
    x, stream = _example_stream()
    blob = write_stream(stream)
    src = tmp_path / "a.psc"
    src.write_bytes(blob)
    out_wav = tmp_path / "a.wav"
    res = subprocess.run(
        [sys.executable, "-m", "psycodec.cli", "decode", str(src), str(out_wav)],
        capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    y, rate = read_wav(out_wav)
    direct = np.clip(np.rint(codec.decode(stream)), -32768, 32767)
    assert np.array_equal(y, direct)
