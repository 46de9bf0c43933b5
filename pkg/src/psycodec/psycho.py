"""Signal-dependent masking model: the noise-confining operator symbol,
the absolute hearing threshold and listening-test stimuli.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import SignalError
from .grid import PhaseSymbol, TFGrid
from .noise import NoiseSpec, shape_noise
from .phase_space import bv_check, coherent_state, sech_smooth

#: sentinel for "hearing threshold disabled" (keeps tests bit-exact)
ATH_DISABLED = math.inf

FLOOR_REL = 1e-9  # positivity floor relative to the symbol maximum
CLIP_LIMIT = 32767.0  # unit-quantization full scale (one 16-bit step = 1)


@dataclass(frozen=True)
class MaskingParams:
    """Masking model parameters.

    alpha is the calibrated threshold scale; a_t / a_f are the temporal
    and frequency masking scales (seconds, Hz); window_width_a is the
    coherent-state window width.  ath_offset_db maps the hearing
    threshold onto the unit-quantization power scale; the default (inf)
    disables it.
    """

    alpha: float = 0.1
    a_t: float = 0.02
    a_f: float = 100.0
    window_width_a: float = 0.01
    ath_offset_db: float = ATH_DISABLED

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise ValueError("alpha must lie in (0, 1]")
        planck = 2.0 * math.pi * self.a_t * self.a_f
        if planck < 10.0:
            warnings.warn(
                f"2*pi*a_t*a_f = {planck:.2f} < 10: masking scales barely "
                "resolve a Planck cell", stacklevel=2)


@dataclass(frozen=True)
class MaskingModel:
    """Masking threshold symbols for one signal."""

    S_psi: PhaseSymbol
    M_psi: PhaseSymbol
    H: PhaseSymbol
    params: MaskingParams
    grid: TFGrid = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "grid", self.S_psi.grid)


def build_masking(signal: np.ndarray, sample_rate: float, params: MaskingParams,
                  grid: TFGrid | None = None) -> MaskingModel:
    """Smooth the coherent-state representation into the noise-confining
    threshold: S = sech_smooth(C), M = alpha^2 S, plus the hearing curve."""
    x = np.asarray(signal, dtype=np.float64)
    if grid is None:
        grid = TFGrid.for_signal(x.size, sample_rate, params.window_width_a)
    C = coherent_state(x, grid)
    smooth = sech_smooth(C, params.a_t, params.a_f)
    # additive floor: same 1e-9 * max level as a hard clamp, but smooth in
    # the log domain, so decaying tails meet silence without a moving kink
    floor = FLOOR_REL * max(float(smooth.values.max()), 1e-300)
    S = PhaseSymbol(grid, smooth.values + floor, check=False)
    M = PhaseSymbol(grid, params.alpha ** 2 * S.values, check=False)
    H = hearing_threshold(grid, params.ath_offset_db)
    return MaskingModel(S_psi=S, M_psi=M, H=H, params=params)


def terhardt_db(f_hz: np.ndarray) -> np.ndarray:
    """Standard absolute-threshold-of-hearing approximation, dB."""
    khz = np.maximum(f_hz, 20.0) / 1000.0
    return (3.64 * khz ** -0.8
            - 6.5 * np.exp(-0.6 * (khz - 3.3) ** 2)
            + 1e-3 * khz ** 4)


def hearing_threshold(grid: TFGrid, ath_offset_db: float = ATH_DISABLED) -> PhaseSymbol:
    """Time-independent hearing-threshold symbol on the unit power scale.

    With the disabled sentinel the symbol is identically zero and the
    lock variants degrade to the pure inverse.
    """
    if ath_offset_db == ATH_DISABLED:
        return PhaseSymbol.constant(grid, 0.0)
    db = terhardt_db(grid.freqs()) + ath_offset_db
    row = 10.0 ** (db / 10.0)
    vals = np.tile(row, (grid.n_time, 1))
    return PhaseSymbol(grid, vals, check=False)


def check_masking_bv(model: MaskingModel, tolerance: float = 0.1) -> bool:
    """S_psi must be of bounded variation at the masking scales."""
    rep = bv_check(model.S_psi, model.params.a_t, model.params.a_f)
    return rep.passes(tolerance)


def stimulus(signal: np.ndarray, model: MaskingModel, alpha_test: float,
             seed: int) -> tuple[np.ndarray, float]:
    """Listening-test stimulus: psi + alpha * (shaped noise of S_psi).

    Returns the stimulus and the headroom factor applied to keep the
    result inside the unit-quantization full scale (1.0 when untouched).
    """
    x = np.asarray(signal, dtype=np.float64)
    if x.size != int(model.grid.n_time * model.grid.hop) and \
            abs(x.size - model.grid.n_time * model.grid.hop) > model.grid.hop:
        raise SignalError("model was not built from a signal of this length")
    noise = shape_noise(NoiseSpec(symbol=model.S_psi, seed=seed), x.size)
    out = x + alpha_test * noise
    peak = np.abs(out).max()
    headroom = 1.0
    if peak > CLIP_LIMIT:
        headroom = CLIP_LIMIT / peak
        out = out * headroom
    if np.abs(out).max() > CLIP_LIMIT * (1 + 1e-12):
        raise SignalError("stimulus clips after normalization")
    return out, headroom
