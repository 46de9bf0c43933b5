"""Exception hierarchy shared by all psycodec modules."""


class PsycodecError(Exception):
    """Base class for all errors raised by this package."""


class SignalError(PsycodecError):
    """Bad input signal (too short, non-finite, wrong shape)."""


class GridMismatchError(PsycodecError):
    """Symbols or signals defined on incompatible grids."""


class KernelUnderResolvedError(PsycodecError):
    """Smoothing scale smaller than one grid cell."""


class FloorRequiredError(PsycodecError):
    """Operation needs a strictly positive symbol; apply a floor first."""


class DomainError(PsycodecError):
    """Scalar function evaluated outside its domain."""


class UnderpoweredEstimateError(PsycodecError):
    """Too few noise realizations for a meaningful estimate."""


class OverloadError(PsycodecError):
    """Quantized coefficient exceeds the format's coefficient range."""

    def __init__(self, message, chunk_index=None):
        super().__init__(message)
        self.chunk_index = chunk_index


class StreamFormatError(PsycodecError):
    """Base class for bitstream parsing failures."""


class TruncatedStreamError(StreamFormatError):
    """Stream ends before the declared payload."""


class CrcMismatchError(StreamFormatError):
    """Header checksum does not match."""


class VersionError(StreamFormatError):
    """Unsupported stream version or bad magic."""


class WavFormatError(PsycodecError):
    """Unsupported WAV file (bit depth, channel count, compression)."""
