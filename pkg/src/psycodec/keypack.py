"""Adaptive-grid spline storage of the key symbol.

The key is stored as byte-quantized knot values on an adaptive grid:
variable time steps, and per selected time a frequency step, each chosen
as large as possible while the spline reconstruction stays within the
fractional tolerance.  Knot bytes are log-quantized over the recorded
value range and the spline interpolates linearly in the log domain
(geometric interpolation), so exponential tails cost almost no knots.
"""

import struct
from dataclasses import dataclass

import numpy as np

from .errors import FloorRequiredError, GridMismatchError, StreamFormatError
from .grid import PhaseSymbol, TFGrid


def _varint_encode(values, out: bytearray):
    for v in values:
        v = int(v)
        while True:
            b = v & 0x7F
            v >>= 7
            if v:
                out.append(b | 0x80)
            else:
                out.append(b)
                break


def _varint_decode(buf: bytes, pos: int, count: int):
    vals = np.empty(count, dtype=np.int64)
    for i in range(count):
        shift = 0
        acc = 0
        while True:
            if pos >= len(buf):
                raise StreamFormatError("truncated varint")
            b = buf[pos]
            pos += 1
            acc |= (b & 0x7F) << shift
            if not (b & 0x80):
                break
            shift += 7
        vals[i] = acc
    return vals, pos


@dataclass
class KeyCodebook:
    """Byte-quantized adaptive-grid spline representation of a key symbol."""

    n_time: int
    n_freq: int
    time_knots: np.ndarray          # ascending time indices, first 0, last n_time-1
    freq_steps: np.ndarray          # per-knot frequency stride
    knot_values: list               # per-knot uint8 arrays
    log_min: float
    log_max: float

    def serialized_size(self) -> int:
        return len(self.to_bytes())

    def to_bytes(self) -> bytes:
        out = bytearray()
        out += struct.pack("<IIdd", self.n_time, self.n_freq,
                           self.log_min, self.log_max)
        _varint_encode([len(self.time_knots)], out)
        deltas = np.diff(np.concatenate([[0], self.time_knots]))
        _varint_encode(deltas, out)
        for step, vals in zip(self.freq_steps, self.knot_values):
            _varint_encode([step, len(vals)], out)
            out += vals.astype(np.uint8).tobytes()
        return bytes(out)

    @classmethod
    def from_bytes(cls, buf: bytes) -> "KeyCodebook":
        if len(buf) < 24:
            raise StreamFormatError("key codebook truncated")
        n_time, n_freq, log_min, log_max = struct.unpack_from("<IIdd", buf, 0)
        pos = 24
        (nk,), pos = _varint_decode(buf, pos, 1)
        deltas, pos = _varint_decode(buf, pos, nk)
        time_knots = np.cumsum(deltas)
        steps = np.empty(nk, dtype=np.int64)
        values = []
        for i in range(nk):
            (step, cnt), pos = _varint_decode(buf, pos, 2)
            steps[i] = step
            if pos + cnt > len(buf):
                raise StreamFormatError("key codebook truncated")
            values.append(np.frombuffer(buf, dtype=np.uint8,
                                        count=int(cnt), offset=pos).copy())
            pos += int(cnt)
        return cls(n_time=n_time, n_freq=n_freq, time_knots=time_knots,
                   freq_steps=steps, knot_values=values,
                   log_min=log_min, log_max=log_max)


def _freq_knot_indices(n_freq: int, step: int) -> np.ndarray:
    idx = np.arange(0, n_freq, step)
    if idx[-1] != n_freq - 1:
        idx = np.append(idx, n_freq - 1)
    return idx


def _slice_log(codes: np.ndarray, knot_idx: np.ndarray, n_freq: int,
               log_min: float, log_span: float) -> np.ndarray:
    lv = log_min + codes.astype(np.float64) * (log_span / 255.0)
    return np.interp(np.arange(n_freq), knot_idx, lv)


def _quantize_codes(log_vals: np.ndarray, log_min: float, log_span: float) -> np.ndarray:
    q = np.rint((log_vals - log_min) / log_span * 255.0)
    return np.clip(q, 0, 255).astype(np.uint8)


def pack_key(key: PhaseSymbol, frac_tol: float = 0.10) -> KeyCodebook:
    """Greedy adaptive-grid packing of a strictly positive key symbol.

    Each time step, then each per-slice frequency step, is grown as
    large as possible subject to the reconstructed spline staying within
    frac_tol of the source at every grid cell (value quantization
    included in the check).  Deterministic.
    """
    vals = key.values
    if np.any(vals <= 0):
        raise FloorRequiredError("pack_key needs a strictly positive key")
    n_time, n_freq = vals.shape
    logv = np.log(vals)
    log_min = float(logv.min())
    log_max = float(logv.max())
    log_span = max(log_max - log_min, 1e-12)

    # The slice budget must leave room above the byte-quantization floor
    # (half a log step), or interpolation strides collapse to 1; the span
    # check below is the hard gate at frac_tol either way.
    quant_floor = np.expm1(log_span / 255.0 / 2.0)
    if quant_floor > 0.8 * frac_tol:
        raise FloorRequiredError(
            "key dynamic range too wide for one-byte log quantization "
            f"at tolerance {frac_tol}")
    slice_budget = min(0.85 * frac_tol, quant_floor + 0.3 * frac_tol)

    slice_cache: dict = {}

    def build_slice(t: int):
        if t in slice_cache:
            return slice_cache[t]
        row_log = logv[t]
        best = None
        step = 1
        last_ok = None
        while step < 2 * n_freq:
            idx = _freq_knot_indices(n_freq, step)
            codes = _quantize_codes(row_log[idx], log_min, log_span)
            rec = _slice_log(codes, idx, n_freq, log_min, log_span)
            err = np.abs(np.expm1(rec - row_log))
            if err.max() <= slice_budget:
                last_ok = (step, codes, rec)
                step *= 2
            else:
                break
        if last_ok is None:
            raise FloorRequiredError(
                "key dynamic range too wide for one-byte log quantization "
                f"at tolerance {frac_tol}")
        lo, hi = last_ok[0], min(last_ok[0] * 2, 2 * n_freq)
        while hi - lo > 1:  # largest passing step in [lo, hi)
            mid = (lo + hi) // 2
            idx = _freq_knot_indices(n_freq, mid)
            codes = _quantize_codes(row_log[idx], log_min, log_span)
            rec = _slice_log(codes, idx, n_freq, log_min, log_span)
            if np.abs(np.expm1(rec - row_log)).max() <= slice_budget:
                lo, last_ok = mid, (mid, codes, rec)
            else:
                hi = mid
        slice_cache[t] = last_ok
        return last_ok

    def span_ok(t0, rec0, t1, rec1):
        if t1 == t0:
            return True
        w = (np.arange(t0, t1 + 1) - t0) / (t1 - t0)
        rec = rec0[None, :] * (1.0 - w)[:, None] + rec1[None, :] * w[:, None]
        err = np.abs(np.expm1(rec - logv[t0:t1 + 1]))
        return err.max() <= frac_tol

    knots = [0]
    steps = []
    codes_list = []
    step0, codes0, rec0 = build_slice(0)
    steps.append(step0)
    codes_list.append(codes0)
    t0, cur_rec = 0, rec0
    while t0 < n_time - 1:
        # grow the candidate span, then bisect the largest passing one
        grow = 1
        last = None
        while True:
            t1 = min(t0 + grow, n_time - 1)
            s1 = build_slice(t1)
            if span_ok(t0, cur_rec, t1, s1[2]):
                last = (t1, s1)
                if t1 == n_time - 1:
                    break
                grow *= 2
            else:
                break
        if last is None:
            t1 = t0 + 1  # adjacent column always splits the span
            s1 = build_slice(t1)
            last = (t1, s1)
        elif last[0] != min(t0 + grow, n_time - 1):
            lo = last[0]
            hi = min(t0 + grow, n_time - 1)
            while hi - lo > 1:
                mid = (lo + hi) // 2
                s_mid = build_slice(mid)
                if span_ok(t0, cur_rec, mid, s_mid[2]):
                    lo, last = mid, (mid, s_mid)
                else:
                    hi = mid
        t1, (step1, codes1, rec1) = last
        knots.append(t1)
        steps.append(step1)
        codes_list.append(codes1)
        t0, cur_rec = t1, rec1

    return KeyCodebook(n_time=n_time, n_freq=n_freq,
                       time_knots=np.asarray(knots, dtype=np.int64),
                       freq_steps=np.asarray(steps, dtype=np.int64),
                       knot_values=codes_list,
                       log_min=log_min, log_max=log_max)


def unpack_key(codebook: KeyCodebook, grid: TFGrid) -> PhaseSymbol:
    """Reconstruct the spline exactly as packed (bit-deterministic)."""
    if (codebook.n_time, codebook.n_freq) != (grid.n_time, grid.n_freq):
        raise GridMismatchError(
            f"codebook {codebook.n_time}x{codebook.n_freq} does not match grid "
            f"{grid.n_time}x{grid.n_freq}")
    log_span = max(codebook.log_max - codebook.log_min, 1e-12)
    slices = np.empty((len(codebook.time_knots), codebook.n_freq))
    for i, (step, codes) in enumerate(zip(codebook.freq_steps, codebook.knot_values)):
        idx = _freq_knot_indices(codebook.n_freq, int(step))
        slices[i] = _slice_log(codes, idx, codebook.n_freq,
                               codebook.log_min, log_span)
    t = np.arange(codebook.n_time)
    knots = codebook.time_knots
    seg = np.clip(np.searchsorted(knots, t, side="right") - 1, 0, len(knots) - 2) \
        if len(knots) > 1 else np.zeros(codebook.n_time, dtype=np.int64)
    if len(knots) == 1:
        vals = np.tile(slices[0], (codebook.n_time, 1))
    else:
        t0 = knots[seg]
        t1 = knots[seg + 1]
        w = np.where(t1 > t0, (t - t0) / np.maximum(t1 - t0, 1), 0.0)[:, None]
        vals = slices[seg] * (1.0 - w) + slices[seg + 1] * w
    return PhaseSymbol(grid, np.exp(vals), check=False)
