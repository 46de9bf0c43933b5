"""Phase-space-shaped noise: generation from white noise and estimation
of a noise process's symbol from realizations.

The white generator is SplitMix64, fixed by the format so calibration
stimuli and dither are regenerable from a seed alone, on any platform.
"""

from dataclasses import dataclass

import numpy as np

from .errors import FloorRequiredError, SignalError, UnderpoweredEstimateError
from .grid import PhaseSymbol, TFGrid
from . import dense_oracle
from .phase_space import SQRT, apply_symbol, symbol_function

UNIFORM_VARIANCE = 1.0 / 12.0  # variance of uniform(-1/2, 1/2)

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def _splitmix64(seed: int, n: int, offset: int = 0) -> np.ndarray:
    """n raw 64-bit outputs of SplitMix64 starting at stream position offset."""
    idx = np.arange(offset + 1, offset + n + 1, dtype=np.uint64)
    z = np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + idx * _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def white_noise(n: int, seed: int) -> np.ndarray:
    """i.i.d. uniform(-1/2, 1/2) samples, deterministic per seed."""
    if n < 1:
        raise SignalError("noise length must be >= 1")
    bits = _splitmix64(seed, n)
    return (bits >> np.uint64(11)).astype(np.float64) * 2.0 ** -53 - 0.5


@dataclass(frozen=True)
class NoiseSpec:
    """Target noise operator symbol plus generation parameters."""

    symbol: PhaseSymbol
    seed: int
    variance_scale: float = UNIFORM_VARIANCE


def shape_noise(spec: NoiseSpec, n: int) -> np.ndarray:
    """Realize noise whose two-point operator has symbol ~ N * variance_scale.

    Applies the square-root symbol of N to uniform white noise:
    Y = sqrt(N) X.
    """
    if np.any(spec.symbol.values < 0):
        raise FloorRequiredError("noise symbol must be nonnegative (floor first)")
    root = symbol_function(spec.symbol.floored(), SQRT, order=0)
    return apply_symbol(root, white_noise(n, spec.seed))


def estimate_noise_symbol(realizations, grid: TFGrid, method: str = "auto") -> PhaseSymbol:
    """Symbol of the ensemble two-point operator E[Y Y^T].

    method 'dense' forms the full correlation matrix and transforms it
    through the oracle (grid must be the oracle grid of the realization
    length).  method 'spectrogram' averages coherent-state power spectra
    on a codec grid, a smoothed view adequate for slowly varying noise.
    """
    Y = np.asarray(realizations, dtype=np.float64)
    if Y.ndim != 2:
        raise SignalError("realizations must be a 2-D array (count x length)")
    count, length = Y.shape
    if count < 100:
        raise UnderpoweredEstimateError(
            f"underpowered estimate: {count} realizations < 100")

    if method == "auto":
        method = "dense" if grid.two_sided else "spectrogram"
    if method == "dense":
        if length > dense_oracle.MAX_ORACLE_N:
            raise SignalError("dense estimation capped; use method='spectrogram'")
        corr = (Y.T @ Y) / count
        sym = dense_oracle.weyl_symbol(dense_oracle.DenseOperator(corr))
        if not grid.compatible(sym.grid):
            raise SignalError("grid does not match the oracle grid of the data")
        return sym
    if method == "spectrogram":
        from .phase_space import gaussian_window

        w = gaussian_window(grid)
        support = grid.window_support
        centers = (np.arange(grid.n_time) * grid.hop).astype(np.int64) + support
        idx = centers[:, None] + np.arange(-support, support + 1)[None, :]
        wnorm = (w * w).sum()
        acc = np.zeros((grid.n_time, grid.n_freq))
        block = max(1, int(2e6 / max(idx.size, 1)))
        for lo in range(0, count, block):
            rows = Y[lo:lo + block]
            pad = np.concatenate(
                [np.zeros((rows.shape[0], support)), rows,
                 np.zeros((rows.shape[0], support + int(grid.hop)))], axis=1)
            frames = pad[:, idx] * w
            spec = np.abs(np.fft.rfft(frames, n=grid.n_fft, axis=2)) ** 2
            acc += spec.sum(axis=0)
        return PhaseSymbol(grid, acc / (count * wnorm), check=False)
    raise ValueError(f"unknown method {method!r}")
