"""Phase-space operations: spectrograms, smoothing, variation checks,
pointwise operator calculus and frame-based symbol application.

Conventions.  Time in seconds, frequency in Hz, transforms use the
e^{2*pi*i*f*t} kernel so the Planck cell is dt*df = 1.  A symbol applied
to a signal acts as a Gabor multiplier over constant-overlap-add frames;
for symbols of bounded variation this agrees with exact Weyl quantization
to the same order as the pointwise function calculus (see dense_oracle
for the ground-truth transform).
"""

from dataclasses import dataclass

import numpy as np

from .errors import (DomainError, FloorRequiredError, GridMismatchError,
                     KernelUnderResolvedError, SignalError)
from .grid import PhaseSymbol, TFGrid

TWO_PI = 2.0 * np.pi

# The sech kernel is specified through its target variation scales; to
# guarantee |d/dt (k*A)| <= (k*A)/a_t even where tanh saturates, the
# kernel half-width uses the widened parameter (pi/2)*a.
KERNEL_WIDEN = np.pi / 2.0


# ----------------------------------------------------------------------
# scalar functions with the derivatives the first-order correction needs
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class ScalarFunc:
    """Pointwise function of a symbol with 2nd/3rd derivatives and domain."""

    name: str
    f: callable
    d2: callable
    d3: callable
    domain_min: float = -np.inf  # open bound: values must be strictly greater

    def check_domain(self, values: np.ndarray):
        bad = values <= self.domain_min
        if np.any(bad):
            i, k = np.argwhere(bad)[0]
            raise DomainError(
                f"{self.name} undefined at cell (t={i}, f={k}): value {values[i, k]!r}")


IDENTITY = ScalarFunc("identity", lambda x: x, lambda x: np.zeros_like(x),
                      lambda x: np.zeros_like(x))
SQRT = ScalarFunc("sqrt", np.sqrt, lambda x: -0.25 * x ** -1.5,
                  lambda x: 0.375 * x ** -2.5, domain_min=0.0)
INV_SQRT = ScalarFunc("inv_sqrt", lambda x: x ** -0.5, lambda x: 0.75 * x ** -2.5,
                      lambda x: -1.875 * x ** -3.5, domain_min=0.0)
RECIPROCAL = ScalarFunc("reciprocal", lambda x: 1.0 / x, lambda x: 2.0 * x ** -3,
                        lambda x: -6.0 * x ** -4, domain_min=0.0)
LOG2 = ScalarFunc("log2", np.log2, lambda x: -1.0 / (np.log(2.0) * x * x),
                  lambda x: 2.0 / (np.log(2.0) * x ** 3), domain_min=0.0)


def gaussian_window(grid: TFGrid) -> np.ndarray:
    """Truncated coherent-state window exp(-m^2 / (2 (a fs)^2)), |m| <= 4 a fs."""
    a_samp = grid.window_width_a * grid.sample_rate
    m = np.arange(-grid.window_support, grid.window_support + 1)
    return np.exp(-(m.astype(np.float64) ** 2) / (2.0 * a_samp * a_samp))


def coherent_state(signal: np.ndarray, grid: TFGrid) -> PhaseSymbol:
    """Gaussian-window power spectrogram |STFT|^2 on the grid.

    Normalized by the window energy so the result is the Wigner function
    smoothed by a unit-mass Gaussian: its phase-space integral equals the
    signal energy (up to window truncation).
    """
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1:
        raise SignalError("signal must be one-dimensional")
    if not np.all(np.isfinite(x)):
        raise SignalError("signal contains non-finite samples")
    if x.size < grid.hop:
        raise SignalError("signal too short")
    if grid.two_sided:
        raise GridMismatchError("coherent_state needs a one-sided codec grid")

    w = gaussian_window(grid)
    support = grid.window_support
    n_fft = grid.n_fft
    if w.size > n_fft:
        raise GridMismatchError("window support exceeds the grid frame length")

    pad = np.concatenate([np.zeros(support), x, np.zeros(support + int(grid.hop))])
    centers = (np.arange(grid.n_time) * grid.hop).astype(np.int64) + support
    idx = centers[:, None] + np.arange(-support, support + 1)[None, :]
    frames = pad[idx] * w
    spec = np.abs(np.fft.rfft(frames, n=n_fft, axis=1)) ** 2
    spec /= (w * w).sum()
    return PhaseSymbol(grid, spec, check=False)


# ----------------------------------------------------------------------
# sech smoothing
# ----------------------------------------------------------------------

def _sech_taps(scale_cells: float) -> np.ndarray:
    """Discrete unit-mass sech profile with widened half-width."""
    a = KERNEL_WIDEN * scale_cells
    # sech tail below ~1e-10 relative at pi x / (2a) ~ 23.7
    half = int(np.ceil(2.0 * a / np.pi * 24.0)) + 1
    x = np.arange(-half, half + 1, dtype=np.float64)
    taps = 1.0 / np.cosh(np.pi * x / (2.0 * a))
    return taps / taps.sum()


def sech_kernel(grid: TFGrid, a_t: float, a_f: float) -> np.ndarray:
    """The separable discrete smoothing kernel used by sech_smooth.

    Continuous form 1/(4 at af) sech(pi t/(2 at)) sech(pi f/(2 af)) with
    at = (pi/2) a_t, af = (pi/2) a_f, sampled on grid cells and
    renormalized to unit mass.
    """
    kt = _sech_taps(a_t / grid.dt)
    kf = _sech_taps(a_f / grid.df)
    return np.outer(kt, kf)


def sech_smooth(sym: PhaseSymbol, a_t: float, a_f: float) -> PhaseSymbol:
    """Convolve a nonnegative symbol with the unit-mass sech kernel.

    The output is of bounded variation with scales (a_t, a_f).  Edges are
    reflect-padded, so constants are reproduced exactly.
    """
    g = sym.grid
    if a_t < g.dt or a_f < g.df:
        raise KernelUnderResolvedError(
            f"kernel under-resolved: need a_t >= {g.dt:.3g} s and a_f >= {g.df:.3g} Hz")
    if np.any(sym.values < 0):
        raise FloorRequiredError("sech_smooth expects a nonnegative symbol")

    kt = _sech_taps(a_t / g.dt)
    kf = _sech_taps(a_f / g.df)
    vals = _conv_axis(sym.values, kt, axis=0, circular=False)
    vals = _conv_axis(vals, kf, axis=1, circular=g.two_sided)
    np.maximum(vals, 0.0, out=vals)  # guard fft round-off
    return PhaseSymbol(g, vals, check=False)


def _conv_axis(arr: np.ndarray, taps: np.ndarray, axis: int, circular: bool) -> np.ndarray:
    half = taps.size // 2
    a = np.moveaxis(arr, axis, 0)
    n = a.shape[0]
    if circular:
        reps = int(np.ceil(half / n)) + 1
        ext = np.concatenate([a] * (2 * reps + 1), axis=0)
        lo = reps * n - half
        ext = ext[lo:lo + n + 2 * half]
    else:
        top = a[1:half + 1][::-1] if half > 0 else a[:0]
        bot = a[-half - 1:-1][::-1] if half > 0 else a[:0]
        while top.shape[0] < half:  # kernel wider than the grid
            top = np.concatenate([a[::-1], top], axis=0)
            bot = np.concatenate([bot, a[::-1]], axis=0)
        ext = np.concatenate([top[-half:] if half else a[:0], a,
                              bot[:half] if half else a[:0]], axis=0)
    m = ext.shape[0]
    nfft = _fft_len(m + taps.size - 1)
    spec = np.fft.rfft(ext, n=nfft, axis=0) * np.fft.rfft(taps, n=nfft)[:, None]
    full = np.fft.irfft(spec, n=nfft, axis=0)
    out = full[2 * half:2 * half + n]
    return np.moveaxis(out, 0, axis)


def _fft_len(n: int) -> int:
    p = 1
    while p < n:
        p *= 2
    return p


# ----------------------------------------------------------------------
# bounded-variation check
# ----------------------------------------------------------------------

@dataclass
class BVReport:
    """Scaled derivative ratios of a symbol against target scales."""

    a_t: float
    a_f: float
    max_ratio: dict
    planck_product: float

    def passes(self, tolerance: float = 0.1) -> bool:
        return all(r <= 1.0 + tolerance for r in self.max_ratio.values())


def _grad(values: np.ndarray, dt: float, df: float):
    gt = np.gradient(values, dt, axis=0)
    gf = np.gradient(values, df, axis=1)
    return gt, gf


def bv_check(sym: PhaseSymbol, a_t: float, a_f: float, interior: int = 2) -> BVReport:
    """Max of |d^n_t d^m_f A / A| * a_t^n * a_f^m over the grid interior,
    for 1 <= n+m <= 2, by central finite differences."""
    if np.any(sym.values <= 0):
        raise FloorRequiredError("floor required: bv_check needs a strictly positive symbol")
    g = sym.grid
    A = sym.values
    At, Af = _grad(A, g.dt, g.df)
    Att = np.gradient(At, g.dt, axis=0)
    Atf = np.gradient(At, g.df, axis=1)
    Aff = np.gradient(Af, g.df, axis=1)

    sl = (slice(interior, A.shape[0] - interior or None),
          slice(interior, A.shape[1] - interior or None))
    base = A[sl]
    ratios = {
        (1, 0): np.abs(At[sl] / base).max() * a_t,
        (0, 1): np.abs(Af[sl] / base).max() * a_f,
        (2, 0): np.abs(Att[sl] / base).max() * a_t ** 2,
        (1, 1): np.abs(Atf[sl] / base).max() * a_t * a_f,
        (0, 2): np.abs(Aff[sl] / base).max() * a_f ** 2,
    }
    return BVReport(a_t=a_t, a_f=a_f, max_ratio=ratios,
                    planck_product=TWO_PI * a_t * a_f)


# ----------------------------------------------------------------------
# pointwise operator calculus
# ----------------------------------------------------------------------

def symbol_function(sym: PhaseSymbol, func: ScalarFunc, order: int = 0) -> PhaseSymbol:
    """Symbol of func(operator) from the symbol of the operator.

    Order 0 is the pointwise map func(A).  Order 1 subtracts the leading
    derivative correction

        (1/4)(1/(2 pi)^2) [ (f''(A)/4)(A_tt A_ff - A_tf^2)
                          + (f'''(A)/6)(A_t^2 A_ff + A_f^2 A_tt - 2 A_t A_f A_tf) ],

    with partials taken by central differences in physical units.
    """
    if order not in (0, 1):
        raise ValueError("order must be 0 or 1")
    func.check_domain(sym.values)
    out = func.f(sym.values)
    if order == 1:
        g = sym.grid
        A = sym.values
        At, Af = _grad(A, g.dt, g.df)
        Att = np.gradient(At, g.dt, axis=0)
        Atf = np.gradient(At, g.df, axis=1)
        Aff = np.gradient(Af, g.df, axis=1)
        hess = Att * Aff - Atf ** 2
        grad2 = At ** 2 * Aff + Af ** 2 * Att - 2.0 * At * Af * Atf
        corr = (func.d2(A) / 4.0 * hess + func.d3(A) / 6.0 * grad2) / (4.0 * TWO_PI ** 2)
        out = out - corr
    return PhaseSymbol(sym.grid, out, check=False)


@dataclass
class StarProduct:
    """Moyal product truncation; the odd orders are imaginary for real symbols."""

    real: PhaseSymbol
    imag: PhaseSymbol


def star_moyal(A: PhaseSymbol, B: PhaseSymbol, order: int = 0) -> StarProduct:
    """Moyal star product of two symbols, truncated at the given order.

    Order 0 is the ordinary product; order 1 adds (i/2) A J B with the
    Janus bidifferential J = (1/2 pi)(left-t right-f - left-f right-t);
    order 2 adds the (i/2)^2/2! term.
    """
    if not A.grid.compatible(B.grid):
        raise GridMismatchError("star_moyal operands live on different grids")
    if order not in (0, 1, 2):
        raise ValueError("order must be 0, 1 or 2")
    g = A.grid
    re = A.values * B.values
    im = np.zeros_like(re)
    if order >= 1:
        At, Af = _grad(A.values, g.dt, g.df)
        Bt, Bf = _grad(B.values, g.dt, g.df)
        im = (At * Bf - Af * Bt) / (2.0 * TWO_PI)
    if order >= 2:
        Att = np.gradient(At, g.dt, axis=0)
        Atf = np.gradient(At, g.df, axis=1)
        Aff = np.gradient(Af, g.df, axis=1)
        Btt = np.gradient(Bt, g.dt, axis=0)
        Btf = np.gradient(Bt, g.df, axis=1)
        Bff = np.gradient(Bf, g.df, axis=1)
        re = re - (Att * Bff - 2.0 * Atf * Btf + Aff * Btt) / (8.0 * TWO_PI ** 2)
    return StarProduct(PhaseSymbol(g, re, check=False), PhaseSymbol(g, im, check=False))


# ----------------------------------------------------------------------
# frame-based application of a symbol to a signal
# ----------------------------------------------------------------------

def _cola_window(n_fft: int) -> np.ndarray:
    # periodic sqrt-Hann; analysis*synthesis windows at hop n_fft/R sum
    # to exactly R/2 for any integer overlap R >= 2
    n = np.arange(n_fft)
    return np.sqrt(0.5 - 0.5 * np.cos(TWO_PI * n / n_fft))


def default_frame(sample_rate: float, a_t: float, a_f: float,
                  n_fft_cap: int) -> int:
    """Frame length balancing time blur against frequency blur of the
    Gabor multiplier.

    The analysis/synthesis pair blurs the symbol by (sigma_t, sigma_f)
    with sigma_t ~ 0.144 N / fs and sigma_t * sigma_f ~ 0.21.  Frames as
    long as the pure blur balance would allow spill energy across steep
    masking-threshold cliffs (note offsets), so the constant is tuned
    below that: N ~ 1.6 fs sqrt(a_t/a_f), rounded to a power of two.
    """
    ideal = 1.6 * sample_rate * np.sqrt(a_t / max(a_f, 1e-9))
    n = _fft_len(max(int(ideal), 16))
    if abs(ideal - n / 2) < abs(ideal - n):
        n //= 2
    return int(min(n, n_fft_cap))


def apply_symbol(sym: PhaseSymbol, signal: np.ndarray,
                 frame: int | None = None, hop: int | None = None) -> np.ndarray:
    """Apply the operator with the given symbol to a signal.

    Overlapping sqrt-Hann frames: window, rfft, multiply by the symbol
    column interpolated (bilinearly) at the frame center, inverse
    transform, overlap-add.  Exact reconstruction for the unit symbol.
    Output length equals input length.
    """
    g = sym.grid
    if g.two_sided:
        raise GridMismatchError("apply_symbol needs a one-sided codec grid")
    x = np.asarray(signal)
    if x.ndim != 1:
        raise SignalError("signal must be one-dimensional")
    if not np.all(np.isfinite(x)):
        raise SignalError("signal contains non-finite samples")
    n = x.size
    if n > int(g.n_time * g.hop) + int(g.hop):
        raise GridMismatchError("grid does not cover the signal duration")

    n_fft = int(frame) if frame else g.n_fft
    hop = int(hop) if hop else max(1, n_fft // 8)
    if n_fft % hop or hop > n_fft // 2:
        raise SignalError("hop must divide the frame with overlap >= 2")
    win = _cola_window(n_fft)
    overlap = n_fft // hop
    gain = 2.0 / overlap
    complex_in = np.iscomplexobj(x)
    dtype = np.complex128 if complex_in else np.float64
    x = x.astype(dtype)

    pad = np.concatenate([np.zeros(n_fft, dtype), x, np.zeros(2 * n_fft, dtype)])
    starts = np.arange(0, pad.size - n_fft + 1, hop)
    frames = pad[starts[:, None] + np.arange(n_fft)[None, :]] * win

    # symbol column at each frame center: linear in time, clamped edges
    centers = (starts + n_fft / 2.0 - n_fft) / g.hop  # grid column units
    pos = np.clip(centers, 0.0, g.n_time - 1.0)
    i0 = np.floor(pos).astype(np.int64)
    i1 = np.minimum(i0 + 1, g.n_time - 1)
    wfrac = (pos - i0)[:, None]
    cols = (1.0 - wfrac) * sym.values[i0] + wfrac * sym.values[i1]
    if n_fft != g.n_fft:  # frame bins onto grid frequencies
        fbins = np.arange(n_fft // 2 + 1) * (g.sample_rate / n_fft)
        gfreqs = g.freqs()
        idx = np.clip(np.searchsorted(gfreqs, fbins) - 1, 0, g.n_freq - 2)
        wf = (fbins - gfreqs[idx]) / g.freq_step
        wf = np.clip(wf, 0.0, 1.0)
        cols = cols[:, idx] * (1.0 - wf) + cols[:, idx + 1] * wf

    if complex_in:
        spec = np.fft.fft(frames, axis=1)
        kidx = np.arange(n_fft)
        kmap = np.minimum(kidx, n_fft - kidx)  # even extension in f
        spec *= cols[:, kmap]
        proc = np.fft.ifft(spec, axis=1)
    else:
        spec = np.fft.rfft(frames, axis=1)
        spec *= cols
        proc = np.fft.irfft(spec, n=n_fft, axis=1)
    proc *= win * gain

    # frames within one residue class tile disjoint contiguous ranges
    out = np.zeros(pad.size + n_fft, dtype)
    for res in range(overlap):
        block = proc[res::overlap]
        if block.size:
            out[res * hop:res * hop + block.size] += block.ravel()
    return out[n_fft:n_fft + n]
