"""Key/lock transform pair and the encode/decode pipeline.

Encoding applies the lock operator, splits the result into chunks,
takes an orthonormal DFT per chunk and quantizes coefficients to the
integer lattice (quantization is delayed until after the transform so
the noise stays white in both domains).  Coefficients are zigzag/varint
packed and DEFLATE-compressed; the key travels as an adaptive-grid
spline codebook.

The codec packs the key conservatively (biased slightly below the
model's threshold): a stored key larger than the masking operator would
leave the noise-confined regime, while a slightly smaller one only
sacrifices a little entropy.
"""

import enum
import math
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .container import FLAG_DITHER, FLAG_NOISY, StreamHeader
from .errors import GridMismatchError, OverloadError, SignalError
from .grid import PhaseSymbol, TFGrid
from .keypack import KeyCodebook, pack_key, unpack_key
from .noise import white_noise
from .phase_space import LOG2, SQRT, apply_symbol, default_frame, symbol_function
from .psycho import FLOOR_REL, MaskingModel

COEFF_LIMIT = 2 ** 31 - 1  # format coefficient range (signed 32-bit)
NOISY_DITHER_GAIN = math.sqrt(12.0)  # unit-variance white noise on decode


class LockVariant(enum.IntEnum):
    PURE_INVERSE = 0  # lock = 1 / key
    SUM = 1           # lock = 1 / (key + sqrt(H))
    WIENER = 2        # lock = key / (key^2 + H)


@dataclass
class EncodeConfig:
    chunk_size: int = 1024
    lock_variant: LockVariant = LockVariant.PURE_INVERSE
    sofoo_order: int = 0
    seed: int = 0
    key_pack_tol: float = 0.10
    quantize: bool = True      # disabled only for transform-fidelity checks
    dither: bool = False       # subtractive dither of the quantization phase
    parallel: bool = False     # thread chunks; output bytes are identical

    def __post_init__(self):
        if self.chunk_size < 2 or self.chunk_size % 2:
            raise SignalError("chunk_size must be an even integer >= 2")


@dataclass
class EncodedStream:
    """Container contents: header, packed key, entropy-coded chunk payload."""

    header: StreamHeader
    key: KeyCodebook
    payload: bytes

    def coefficients(self) -> np.ndarray:
        """Decode the payload into the (n_chunks, chunk_size) int array."""
        c = self.header.chunk_size
        raw = zlib.decompress(self.payload)
        flat = _zigzag_decode(raw)
        if c and flat.size % c:
            raise SignalError("payload length incompatible with chunk size")
        return flat.reshape(-1, c) if c else flat.reshape(1, -1)


# ----------------------------------------------------------------------
# key and lock
# ----------------------------------------------------------------------

def build_key_lock(model: MaskingModel, variant: LockVariant,
                   sofoo_order: int = 0) -> tuple[PhaseSymbol, PhaseSymbol]:
    """Key = sqrt(M) (pointwise operator calculus), lock per variant.

    With the hearing threshold disabled every variant reduces to the
    pure inverse 1/key.
    """
    key = symbol_function(model.M_psi.floored(FLOOR_REL), SQRT, order=sofoo_order)
    key = PhaseSymbol(key.grid, np.maximum(key.values, np.finfo(np.float64).tiny),
                      check=False)
    lock = _lock_from_key(key, model.H, variant)
    return key, lock


def _lock_from_key(key: PhaseSymbol, H: PhaseSymbol, variant: LockVariant) -> PhaseSymbol:
    k = key.values
    h = H.values
    if variant == LockVariant.PURE_INVERSE:
        vals = 1.0 / k
    elif variant == LockVariant.SUM:
        vals = 1.0 / (k + np.sqrt(h))
    elif variant == LockVariant.WIENER:
        vals = k / (k * k + h)
    else:
        raise SignalError(f"unknown lock variant {variant!r}")
    return PhaseSymbol(key.grid, vals, check=False)


KEY_PACK_BIAS = 0.2     # downward shift of the packing target, in units of tol
KEY_PACK_INNER = 0.8    # spline tolerance of the packing target, in units of tol
KEY_OVERSHOOT_CAP = 0.3  # max allowed stored-key excess over the true key, in tol


def _presmooth_log(values: np.ndarray, grid: TFGrid, seconds: float) -> np.ndarray:
    """Box-average log values along time; strips spectrogram micro-ripple
    the spline would otherwise chase with dense knots."""
    logk = np.log(values)
    width = int(round(seconds * grid.sample_rate / grid.hop / 2.0)) * 2 + 1
    if width <= 1 or grid.n_time <= width:
        return logk
    kern = np.ones(width) / width
    pad = np.concatenate([logk[width - 1:0:-1], logk, logk[-2:-width - 1:-1]], axis=0)
    sm = np.empty_like(pad)
    for k in range(pad.shape[1]):
        sm[:, k] = np.convolve(pad[:, k], kern, mode="same")
    return sm[width - 1:width - 1 + grid.n_time]


def _packed_key(key: PhaseSymbol, tol: float,
                presmooth_seconds: float = 0.0) -> tuple[KeyCodebook, PhaseSymbol]:
    # Pack a lightly smoothed, downward-biased target: the bias keeps the
    # stored key at or below the masking threshold (a larger key would
    # leave the noise-confined regime) while the total deviation from the
    # true key stays within ~tol.
    logk = _presmooth_log(key.values, key.grid, presmooth_seconds) \
        if presmooth_seconds > 0 else np.log(key.values)
    target = PhaseSymbol(key.grid, np.exp(logk) * (1.0 - KEY_PACK_BIAS * tol),
                         check=False)
    cb = pack_key(target, KEY_PACK_INNER * tol)
    rec = unpack_key(cb, key.grid)
    # shift the whole codebook down (value_scale is global) until the
    # stored key exceeds the true key by at most KEY_OVERSHOOT_CAP * tol
    over = float((rec.values / key.values).max())
    cap = 1.0 + KEY_OVERSHOOT_CAP * tol
    if over > cap:
        shift = np.log(over / cap)
        cb.log_min -= shift
        cb.log_max -= shift
        rec = unpack_key(cb, key.grid)
    return cb, rec


def _apply_frame(grid: TFGrid, a_t: float, a_f: float) -> tuple[int, int]:
    """Gabor frame geometry for codec transforms, derivable from the header."""
    frame = default_frame(grid.sample_rate, a_t, a_f, grid.n_fft)
    return frame, max(1, frame // 8)


# ----------------------------------------------------------------------
# chunk quantization
# ----------------------------------------------------------------------

def _chunk_split(x: np.ndarray, c: int) -> np.ndarray:
    n_chunks = int(np.ceil(x.size / c)) if x.size else 1
    padded = np.zeros(n_chunks * c)
    padded[:x.size] = x
    return padded.reshape(n_chunks, c)

_SQRT2 = math.sqrt(2.0)

def _pack_spectrum(spec: np.ndarray) -> np.ndarray:
    """Orthonormal real-DFT coordinates: c reals per chunk of c samples.

    Interior re/im pairs carry sqrt(2) (each feeds two Hermitian bins),
    so together with the ortho-normalized rfft this is an orthonormal
    change of basis: unit-lattice quantization here is exactly the
    unit-scale time-domain quantization model (variance 1/12).
    """
    c = 2 * (spec.shape[-1] - 1)
    out = np.empty(spec.shape[:-1] + (c,))
    out[..., 0] = spec[..., 0].real
    out[..., 1:-1:2] = spec[..., 1:-1].real * _SQRT2
    out[..., 2:-1:2] = spec[..., 1:-1].imag * _SQRT2
    out[..., -1] = spec[..., -1].real
    return out

def _unpack_spectrum(flat: np.ndarray) -> np.ndarray:
    c = flat.shape[-1]
    spec = np.empty(flat.shape[:-1] + (c // 2 + 1,), dtype=np.complex128)
    spec[..., 0] = flat[..., 0]
    spec[..., 1:-1] = (flat[..., 1:-1:2] + 1j * flat[..., 2:-1:2]) / _SQRT2
    spec[..., -1] = flat[..., -1]
    return spec


def _dither_phases(seed: int, shape: tuple) -> np.ndarray:
    return white_noise(int(np.prod(shape)), seed ^ 0xD17E).reshape(shape)


def _zigzag_encode(vals: np.ndarray) -> bytes:
    v = vals.astype(np.int64)
    u = ((v << 1) ^ (v >> 63)).astype(np.uint64)
    # vectorized varint: emit one byte per value per round until done
    bytes_per = np.ones(u.size, dtype=np.int64)
    probe = u >> np.uint64(7)
    while np.any(probe):
        bytes_per += (probe > 0)
        probe >>= np.uint64(7)
    total = int(bytes_per.sum())
    buf = np.zeros(total, dtype=np.uint8)
    pos = np.concatenate([[0], np.cumsum(bytes_per)[:-1]])
    shift = np.zeros(u.size, dtype=np.uint64)
    left = bytes_per.copy()
    cur = pos.copy()
    while np.any(left > 0):
        active = left > 0
        chunk = ((u[active] >> shift[active]) & np.uint64(0x7F)).astype(np.uint8)
        more = left[active] > 1
        chunk[more] |= 0x80
        buf[cur[active]] = chunk
        cur[active] += 1
        shift[active] += np.uint64(7)
        left[active] -= 1
    return buf.tobytes()


def _zigzag_decode(raw: bytes) -> np.ndarray:
    b = np.frombuffer(raw, dtype=np.uint8)
    is_last = (b & 0x80) == 0
    count = int(is_last.sum())
    vals = np.zeros(count, dtype=np.uint64)
    # group bytes by position within each varint
    ends = np.flatnonzero(is_last)
    starts = np.concatenate([[0], ends[:-1] + 1])
    lengths = ends - starts + 1
    max_len = int(lengths.max()) if count else 0
    for k in range(max_len):
        sel = lengths > k
        idx = starts[sel] + k
        vals[sel] |= (b[idx].astype(np.uint64) & np.uint64(0x7F)) << np.uint64(7 * k)
    sv = vals.astype(np.int64)
    return (sv >> 1) ^ -(sv & 1)


def _quantize_chunks(chunks: np.ndarray, seed: int, dither: bool,
                     parallel: bool) -> np.ndarray:
    def one(i):
        spec = np.fft.rfft(chunks[i], norm="ortho")
        flat = _pack_spectrum(spec)
        if dither:
            u = _dither_phases(seed + i, flat.shape)
            q = np.rint(flat + u)
        else:
            q = np.rint(flat)
        if np.abs(q).max() > COEFF_LIMIT:
            raise OverloadError(
                f"coefficient overload in chunk {i}", chunk_index=i)
        return q.astype(np.int64)

    n = chunks.shape[0]
    if parallel and n > 1:
        with ThreadPoolExecutor() as pool:
            rows = list(pool.map(one, range(n)))
    else:
        rows = [one(i) for i in range(n)]
    return np.stack(rows)


def _dequantize_chunks(q: np.ndarray, seed: int, dither: bool) -> np.ndarray:
    vals = q.astype(np.float64)
    if dither:
        for i in range(q.shape[0]):
            vals[i] -= _dither_phases(seed + i, (q.shape[1],))
    spec = _unpack_spectrum(vals)
    return np.fft.irfft(spec, n=q.shape[1], axis=-1, norm="ortho")


# ----------------------------------------------------------------------
# encode / decode
# ----------------------------------------------------------------------

def encode(signal: np.ndarray, model: MaskingModel,
           config: EncodeConfig | None = None) -> EncodedStream:
    """Encode a unit-scale signal against its masking model."""
    config = config or EncodeConfig()
    x = np.asarray(signal, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise SignalError("signal contains non-finite samples")
    grid = model.grid

    flags = FLAG_DITHER if config.dither else 0
    header = StreamHeader(
        sample_rate=int(grid.sample_rate), num_samples=x.size,
        chunk_size=config.chunk_size, alpha=model.params.alpha,
        a_t=model.params.a_t, a_f=model.params.a_f,
        window_a=model.params.window_width_a,
        lock_variant=int(config.lock_variant), flags=flags, seed=config.seed)
    dec_grid = grid_for_header(header)
    if (dec_grid.n_time, dec_grid.n_freq, dec_grid.hop) != \
            (grid.n_time, grid.n_freq, grid.hop):
        raise GridMismatchError(
            "model grid is not the default for its parameters; the decoder "
            "could not reconstruct it")

    key_true, _ = build_key_lock(model, config.lock_variant, config.sofoo_order)
    codebook, key_packed = _packed_key(key_true, config.key_pack_tol,
                                       presmooth_seconds=0.5 * model.params.a_t)
    lock = _lock_from_key(key_packed, model.H, config.lock_variant)

    # frame geometry from the header values the decoder will see
    frame, hop = _apply_frame(grid, float(header.a_t), float(header.a_f))
    encoded = apply_symbol(lock, x, frame=frame, hop=hop)
    chunks = _chunk_split(encoded, config.chunk_size)
    if config.quantize:
        q = _quantize_chunks(chunks, config.seed, config.dither, config.parallel)
        payload = zlib.compress(_zigzag_encode(q.ravel()), 9)
    else:
        # transform-fidelity verification path: raw float coefficients
        spec = np.fft.rfft(chunks, norm="ortho", axis=-1)
        payload = _raw_float_payload(_pack_spectrum(spec))
    return EncodedStream(header=header, key=codebook, payload=payload)


def _raw_float_payload(q: np.ndarray) -> bytes:
    return b"RAWF" + q.astype("<f8").tobytes()


def decode(stream: EncodedStream) -> np.ndarray:
    """Decode to unit-scale samples of the length recorded in the header."""
    h = stream.header
    grid = grid_for_header(h)
    key = unpack_key(stream.key, grid)
    frame, hop = _apply_frame(grid, float(h.a_t), float(h.a_f))

    if h.flags & FLAG_NOISY:
        x = NOISY_DITHER_GAIN * white_noise(h.num_samples, h.seed)
        return apply_symbol(key, x, frame=frame, hop=hop)

    if stream.payload.startswith(b"RAWF"):
        flat = np.frombuffer(stream.payload[4:], dtype="<f8")
        q = flat.reshape(-1, h.chunk_size)
        time = np.fft.irfft(_unpack_spectrum(q), n=h.chunk_size,
                            axis=-1, norm="ortho")
    else:
        q = stream.coefficients()
        time = _dequantize_chunks(q, h.seed, bool(h.flags & FLAG_DITHER))
    flat = time.reshape(-1)[:h.num_samples]
    return apply_symbol(key, flat, frame=frame, hop=hop)


def grid_for_header(h: StreamHeader) -> TFGrid:
    """The decoder-side grid; identical construction to the encoder default."""
    return TFGrid.for_signal(h.num_samples, float(h.sample_rate),
                             float(h.window_a))


def encode_noisy(signal: np.ndarray, model: MaskingModel,
                 config: EncodeConfig | None = None) -> EncodedStream:
    """Noisy-signal mode: no transform payload, the key carries everything.

    The lock is zero (not the key's inverse, recorded via the noisy-mode
    flag); the key scale is sqrt(S_psi) and the decoder dithers
    unit-variance white noise through it.
    """
    config = config or EncodeConfig()
    x = np.asarray(signal, dtype=np.float64)
    key = symbol_function(model.S_psi.floored(FLOOR_REL), SQRT,
                          order=config.sofoo_order)
    codebook, _ = _packed_key(key, config.key_pack_tol,
                              presmooth_seconds=0.5 * model.params.a_t)
    header = StreamHeader(
        sample_rate=int(model.grid.sample_rate), num_samples=x.size,
        chunk_size=config.chunk_size, alpha=model.params.alpha,
        a_t=model.params.a_t, a_f=model.params.a_f,
        window_a=model.params.window_width_a,
        lock_variant=int(config.lock_variant), flags=FLAG_NOISY,
        seed=config.seed)
    return EncodedStream(header=header, key=codebook, payload=b"")


# ----------------------------------------------------------------------
# entropy measures
# ----------------------------------------------------------------------

UNIFORM_ENTROPY_OFFSET = math.log2(2.0 * math.sqrt(3.0))
GAUSSIAN_ENTROPY_OFFSET = math.log2(math.sqrt(math.e * math.pi))


@dataclass
class PerceptualEntropy:
    """Per-time perceptual bit rate implied by the masked-noise budget."""

    times: np.ndarray
    sigma2: np.ndarray
    bits_uniform: np.ndarray
    bits_gauss: np.ndarray
    mean_bits_uniform: float = field(init=False)
    mean_bits_gauss: float = field(init=False)

    def __post_init__(self):
        self.mean_bits_uniform = float(self.bits_uniform.mean())
        self.mean_bits_gauss = float(self.bits_gauss.mean())


def perceptual_entropy(signal: np.ndarray, model: MaskingModel,
                       average_seconds: float | None = None) -> PerceptualEntropy:
    """sigma^2(t) as the time-windowed phase-space average of M^-1 C_psi,
    converted to bits/sample for uniform and gaussian coefficient laws."""
    from .phase_space import coherent_state

    grid = model.grid
    C = coherent_state(np.asarray(signal, dtype=np.float64), grid)
    ratio = C.values / model.M_psi.floored(FLOOR_REL).values
    w = grid.freq_weights()
    sigma2_t = (ratio * w).sum(axis=1) / w.sum()

    if average_seconds is None:
        average_seconds = max(model.params.a_t, 4.0 * grid.dt)
    win = max(1, int(round(average_seconds / grid.dt)))
    kernel = np.ones(win) / win
    padded = np.concatenate([sigma2_t[win - 1:0:-1], sigma2_t,
                             sigma2_t[-2:-win - 1:-1]]) if win > 1 else sigma2_t
    smooth = np.convolve(padded, kernel, mode="same")[
        (win - 1):(win - 1) + sigma2_t.size] if win > 1 else sigma2_t

    sigma2 = np.maximum(smooth, np.finfo(np.float64).tiny)
    half_log = 0.5 * np.log2(sigma2)
    return PerceptualEntropy(
        times=grid.times(), sigma2=sigma2,
        bits_uniform=half_log + UNIFORM_ENTROPY_OFFSET,
        bits_gauss=half_log + GAUSSIAN_ENTROPY_OFFSET)


def noise_entropy(model: MaskingModel) -> float:
    """Phase-space integral of log2 M: the bit content removed by
    tolerating noise at the threshold (equals log2 det of the operator
    for slowly varying M)."""
    M = model.M_psi.floored(FLOOR_REL)
    logm = symbol_function(M, LOG2, order=0)
    return logm.integral()


def measured_histogram_entropy(q: np.ndarray) -> float:
    """First-order entropy (bits/value) of quantized coefficients."""
    vals, counts = np.unique(q.ravel(), return_counts=True)
    p = counts / counts.sum()
    return float(-(p * np.log2(p)).sum())
