"""Time-frequency grids and sampled phase-space symbols.

A TFGrid fixes the discretization of the time-frequency plane shared by
every symbol of one coding run.  Codec grids are one-sided (bins from DC
to Nyquist, matching an rfft of length ``n_fft``) with an integer hop.
The dense oracle uses two-sided grids with half-sample time steps; see
``dense_oracle`` for that layout.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatchError, SignalError


def _next_pow2(n: int) -> int:
    p = 1
    while p < n:
        p *= 2
    return p


@dataclass(frozen=True)
class TFGrid:
    """Discretization of the time-frequency plane.

    Attributes
    ----------
    sample_rate : float
        Signal sample rate in Hz.
    hop : float
        Samples per time column.  Integer >= 1 for codec grids; the dense
        oracle uses 0.5 (half-sample resolution).
    n_time, n_freq : int
        Grid extent.
    freq_step : float
        Frequency spacing in Hz.  One-sided grids cover [0, Nyquist]
        with freq_step = sample_rate / n_fft.
    window_width_a : float
        Width parameter a (seconds) of the coherent-state Gaussian
        window, when the grid was built for one.
    two_sided : bool
        True when the frequency axis wraps the full circle [0, fs).
    window_support : int
        Recorded truncation half-width of the analysis window, samples.
    """

    sample_rate: float
    hop: float
    n_time: int
    n_freq: int
    freq_step: float
    window_width_a: float = 0.0
    two_sided: bool = field(default=False)
    window_support: int = 0

    def __post_init__(self):
        if self.n_freq < 2 or self.n_time < 1:
            raise GridMismatchError("grid must have n_freq >= 2 and n_time >= 1")
        if self.hop <= 0:
            raise GridMismatchError("hop must be positive")

    @classmethod
    def for_signal(cls, n_samples: int, sample_rate: float, window_a: float,
                   hop: int | None = None) -> "TFGrid":
        """Default grid for a signal: hop = a*fs/2, FFT covering +-4a support."""
        if n_samples < 1:
            raise SignalError("signal too short")
        if hop is None:
            hop = max(1, int(round(window_a * sample_rate / 2.0)))
        support = int(round(4.0 * window_a * sample_rate))
        n_fft = _next_pow2(max(2 * support + 1, 4 * hop, 16))
        n_time = int(np.ceil(n_samples / hop))
        return cls(
            sample_rate=float(sample_rate),
            hop=float(hop),
            n_time=n_time,
            n_freq=n_fft // 2 + 1,
            freq_step=sample_rate / n_fft,
            window_width_a=float(window_a),
            window_support=support,
        )

    @property
    def n_fft(self) -> int:
        """Frame length whose rfft bins coincide with the frequency axis."""
        if self.two_sided:
            return self.n_freq
        return 2 * (self.n_freq - 1)

    @property
    def dt(self) -> float:
        """Time step in seconds."""
        return self.hop / self.sample_rate

    @property
    def df(self) -> float:
        return self.freq_step

    def times(self) -> np.ndarray:
        return np.arange(self.n_time) * self.dt

    def freqs(self) -> np.ndarray:
        return np.arange(self.n_freq) * self.freq_step

    def freq_weights(self) -> np.ndarray:
        """Per-bin weights so that sums emulate the two-sided df integral."""
        if self.two_sided:
            return np.ones(self.n_freq)
        w = np.full(self.n_freq, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        return w

    def compatible(self, other: "TFGrid") -> bool:
        return (
            self.sample_rate == other.sample_rate
            and self.hop == other.hop
            and self.n_time == other.n_time
            and self.n_freq == other.n_freq
            and self.two_sided == other.two_sided
        )


class PhaseSymbol:
    """A real-valued function sampled on a time-frequency grid.

    values[i, k] is the symbol at time ``i * hop / fs`` and frequency
    ``k * freq_step``.  Power-like, dimensionless.
    """

    __slots__ = ("grid", "values")

    def __init__(self, grid: TFGrid, values: np.ndarray, check: bool = True):
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (grid.n_time, grid.n_freq):
            raise GridMismatchError(
                f"values shape {values.shape} != grid ({grid.n_time}, {grid.n_freq})")
        if check and not np.all(np.isfinite(values)):
            raise SignalError("symbol contains non-finite values")
        self.grid = grid
        self.values = values

    @classmethod
    def from_function(cls, grid: TFGrid, fn) -> "PhaseSymbol":
        """Sample fn(t_seconds, f_hz) on the grid (broadcasting meshgrid)."""
        t, f = np.meshgrid(grid.times(), grid.freqs(), indexing="ij")
        return cls(grid, fn(t, f))

    @classmethod
    def constant(cls, grid: TFGrid, value: float) -> "PhaseSymbol":
        return cls(grid, np.full((grid.n_time, grid.n_freq), float(value)))

    def copy(self) -> "PhaseSymbol":
        return PhaseSymbol(self.grid, self.values.copy(), check=False)

    def floored(self, rel: float = 1e-9) -> "PhaseSymbol":
        """Clamp from below at rel * max(values); silence produces exact zeros."""
        top = float(self.values.max())
        if top <= 0.0:
            top = 1.0
        return PhaseSymbol(self.grid, np.maximum(self.values, rel * top), check=False)

    def integral(self) -> float:
        """Phase-space integral (dt df), counting negative frequencies for
        one-sided grids via the even symmetry of real-operator symbols."""
        g = self.grid
        return float((self.values * g.freq_weights()).sum() * g.dt * g.df)

    def __repr__(self):
        return (f"PhaseSymbol({self.grid.n_time}x{self.grid.n_freq}, "
                f"range [{self.values.min():.3g}, {self.values.max():.3g}])")
