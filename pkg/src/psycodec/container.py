"""Bit-exact serialization of encoded streams, plus WAV ingestion.

Wire format (all little-endian):

    offset size field
    0      4    magic "PSC1"
    4      1    version (u8, currently 1)
    5      4    sample_rate (u32, Hz)
    9      8    num_samples (u64)
    17     2    chunk_size (u16)
    19     4    alpha (f32)
    23     4    a_t (f32)
    27     4    a_f (f32)
    31     4    window_a (f32)
    35     1    lock_variant (u8)
    36     1    flags (u8: bit0 noisy-mode, bit1 dither-on-decode)
    37     8    seed (u64)
    45     4    key_length (u32)
    49     8    payload_length (u64)
    57     4    CRC32 of bytes [0, 57)

followed by key_length bytes of DEFLATE-compressed key codebook and
payload_length bytes of entropy-coded chunk data.  Quantized
coefficients are signed 32-bit.
"""

import struct
import wave
import zlib
from dataclasses import dataclass

import numpy as np

from .errors import (CrcMismatchError, TruncatedStreamError, VersionError,
                     WavFormatError)

MAGIC = b"PSC1"
VERSION = 1
FLAG_NOISY = 0x01
FLAG_DITHER = 0x02

_HEADER_FMT = "<4sBIQHffffBBQIQ"
_HEADER_SIZE = struct.calcsize(_HEADER_FMT)  # 57
_CRC_FMT = "<I"


@dataclass
class StreamHeader:
    sample_rate: int
    num_samples: int
    chunk_size: int
    alpha: float
    a_t: float
    a_f: float
    window_a: float
    lock_variant: int
    flags: int
    seed: int
    key_length: int = 0
    payload_length: int = 0
    version: int = VERSION

    def __post_init__(self):
        # float fields are 32-bit on the wire; keep memory and wire equal
        for name in ("alpha", "a_t", "a_f", "window_a"):
            setattr(self, name, float(np.float32(getattr(self, name))))

    def pack(self) -> bytes:
        body = struct.pack(
            _HEADER_FMT, MAGIC, self.version, self.sample_rate,
            self.num_samples, self.chunk_size, self.alpha, self.a_t,
            self.a_f, self.window_a, self.lock_variant, self.flags,
            self.seed, self.key_length, self.payload_length)
        return body + struct.pack(_CRC_FMT, zlib.crc32(body))

    @classmethod
    def unpack(cls, buf: bytes) -> "StreamHeader":
        if len(buf) < _HEADER_SIZE + 4:
            raise TruncatedStreamError("stream shorter than the header")
        body = buf[:_HEADER_SIZE]
        (crc,) = struct.unpack_from(_CRC_FMT, buf, _HEADER_SIZE)
        (magic, version, sample_rate, num_samples, chunk_size, alpha, a_t,
         a_f, window_a, lock_variant, flags, seed, key_length,
         payload_length) = struct.unpack(_HEADER_FMT, body)
        if magic != MAGIC:
            raise VersionError(f"bad magic {magic!r}")
        if version != VERSION:
            raise VersionError(f"unsupported version {version}")
        if zlib.crc32(body) != crc:
            raise CrcMismatchError("header CRC mismatch")
        return cls(sample_rate=sample_rate, num_samples=num_samples,
                   chunk_size=chunk_size, alpha=alpha, a_t=a_t, a_f=a_f,
                   window_a=window_a, lock_variant=lock_variant, flags=flags,
                   seed=seed, key_length=key_length,
                   payload_length=payload_length, version=version)


def header_size() -> int:
    return _HEADER_SIZE + 4


def write_stream(stream) -> bytes:
    """Serialize an EncodedStream (deterministic)."""
    key_bytes = zlib.compress(stream.key.to_bytes(), 9)
    header = stream.header
    header.key_length = len(key_bytes)
    header.payload_length = len(stream.payload)
    return header.pack() + key_bytes + stream.payload


def read_stream(buf: bytes):
    """Parse bytes into an EncodedStream; structural inverse of write_stream."""
    from .codec import EncodedStream  # local import avoids a cycle
    from .keypack import KeyCodebook

    header = StreamHeader.unpack(buf)
    start = header_size()
    end_key = start + header.key_length
    end_payload = end_key + header.payload_length
    if len(buf) < end_payload:
        raise TruncatedStreamError(
            f"stream truncated: need {end_payload} bytes, have {len(buf)}")
    try:
        raw_key = zlib.decompress(buf[start:end_key])
    except zlib.error as exc:
        raise TruncatedStreamError(f"key codebook corrupt: {exc}") from exc
    key = KeyCodebook.from_bytes(raw_key)
    return EncodedStream(header=header, key=key, payload=buf[end_key:end_payload])


# ----------------------------------------------------------------------
# WAV (PCM 16-bit mono, samples on the unit quantization scale)
# ----------------------------------------------------------------------

def read_wav(path) -> tuple[np.ndarray, int]:
    """Read 16-bit mono PCM; integer sample values are used as-is."""
    with wave.open(str(path), "rb") as w:
        if w.getnchannels() != 1:
            raise WavFormatError(
                "stereo input not supported: this codec is monophonic")
        if w.getsampwidth() != 2:
            raise WavFormatError(
                f"{8 * w.getsampwidth()}-bit PCM not supported (need 16-bit)")
        if w.getcomptype() != "NONE":
            raise WavFormatError("compressed WAV not supported")
        rate = w.getframerate()
        data = w.readframes(w.getnframes())
    return np.frombuffer(data, dtype="<i2").astype(np.float64), rate


def write_wav(signal: np.ndarray, sample_rate: int, path) -> None:
    """Write samples (unit scale) as 16-bit mono PCM; inverts read_wav
    exactly for in-range integers."""
    x = np.asarray(signal, dtype=np.float64)
    q = np.clip(np.rint(x), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(int(sample_rate))
        w.writeframes(q.tobytes())
