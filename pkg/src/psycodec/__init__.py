"""psycodec: perceptual lossy audio coding through phase-space transforms."""

from .grid import PhaseSymbol, TFGrid
from .phase_space import (BVReport, apply_symbol, bv_check, coherent_state,
                          sech_smooth, star_moyal, symbol_function)
from .psycho import MaskingModel, MaskingParams, build_masking, hearing_threshold, stimulus
from .codec import (EncodeConfig, EncodedStream, LockVariant, build_key_lock,
                    decode, encode, encode_noisy, noise_entropy,
                    perceptual_entropy)
from .keypack import KeyCodebook, pack_key, unpack_key
from .noise import NoiseSpec, estimate_noise_symbol, shape_noise, white_noise
from .container import read_stream, read_wav, write_stream, write_wav

__version__ = "0.1.0"

__all__ = [
    "PhaseSymbol", "TFGrid", "BVReport", "apply_symbol", "bv_check",
    "coherent_state", "sech_smooth", "star_moyal", "symbol_function",
    "MaskingModel", "MaskingParams", "build_masking", "hearing_threshold",
    "stimulus", "EncodeConfig", "EncodedStream", "LockVariant",
    "build_key_lock", "decode", "encode", "encode_noisy", "noise_entropy",
    "perceptual_entropy", "KeyCodebook", "pack_key", "unpack_key",
    "NoiseSpec", "estimate_noise_symbol", "shape_noise", "white_noise",
    "read_stream", "read_wav", "write_stream", "write_wav",
]
