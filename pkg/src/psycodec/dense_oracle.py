"""Exact small-N ground truth: dense operators, the discrete symbol
transform, matrix functions, Wigner functions and trace identities.

Layout.  For an n x n operator (n even, policy cap 4096) the symbol
lives on a doubled-resolution time axis: rows j = 0..2n-2 are the
antidiagonal centers tau = j/2 samples, columns k = 0..2n-1 are the
wrapped frequency bins f = k/(2n) cycles/sample:

    S[j, k] = sum_s A[(j+s)/2, (j-s)/2] e^{-2 pi i k s/(2n)},

(the sign matching the rfft convention used on the codec side, so a
filter diagonal in frequency with profile b lands at +f and an analytic
tone concentrates at its own frequency), the sum running over
differences s with the parity of j.  Integer-time
rows (j even) carry the pointwise semantics of the continuous symbol
(identity -> 1, diag(a) -> a(t)); half-sample rows carry the odd
antidiagonals, the channel that resolves frequencies f from f + 1/2,
which integer sampling aliases.  The map is an exact bijection between
operators and representable symbols: matrix -> symbol -> matrix is the
identity to machine precision, and quantizing the all-ones symbol
returns the identity operator exactly.

Trace normalization: tr(A B) = (1/2n) * sum_{j,k} S_A S_B, exactly.
"""

import numpy as np

from .errors import DomainError, GridMismatchError, SignalError
from .grid import PhaseSymbol, TFGrid

MAX_ORACLE_N = 4096


class DenseOperator:
    """An n x n complex matrix used as the exact operator representation."""

    __slots__ = ("matrix",)

    def __init__(self, matrix: np.ndarray):
        m = np.asarray(matrix, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise SignalError("operator must be a square matrix")
        if m.shape[0] > MAX_ORACLE_N:
            raise SignalError(f"oracle dimension capped at {MAX_ORACLE_N}")
        if not np.all(np.isfinite(m)):
            raise SignalError("operator contains non-finite entries")
        self.matrix = m

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def is_hermitian(self, tol: float = 1e-10) -> bool:
        m = self.matrix
        scale = np.linalg.norm(m)
        return np.linalg.norm(m - m.conj().T) <= tol * max(scale, 1e-300)

    def hermitized(self) -> "DenseOperator":
        return DenseOperator(0.5 * (self.matrix + self.matrix.conj().T))


def oracle_grid(n: int) -> TFGrid:
    """Symbol grid for dimension n: half-sample rows, wrapped frequency axis."""
    return TFGrid(sample_rate=1.0, hop=0.5, n_time=2 * n - 1, n_freq=2 * n,
                  freq_step=1.0 / (2 * n), two_sided=True)


def _index_maps(n: int):
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    mu = (i + j).ravel()
    s = (i - j).ravel() % (2 * n)
    return i.ravel(), j.ravel(), mu, s


def weyl_symbol(op: DenseOperator) -> PhaseSymbol:
    """Discrete symbol of an operator; exactly inverted by inverse_weyl."""
    n = op.n
    if n % 2:
        raise GridMismatchError("oracle dimension must be even")
    i, j, mu, s = _index_maps(n)
    F = np.zeros((2 * n - 1, 2 * n), dtype=np.complex128)
    F[mu, s] = op.matrix.ravel()
    S = np.fft.fft(F, axis=1)
    imag = np.abs(S.imag).max()
    if op.is_hermitian() and imag > 1e-9 * max(np.abs(S.real).max(), 1e-300):
        raise SignalError("Hermitian operator produced a non-real symbol")
    return PhaseSymbol(oracle_grid(n), S.real, check=False)


def inverse_weyl(sym: PhaseSymbol) -> DenseOperator:
    """Operator whose symbol is the given one (real symbols -> Hermitian).

    Symbol content at slots of the wrong row parity is not representable
    and is projected away; symbols produced by weyl_symbol round-trip
    exactly.
    """
    g = sym.grid
    if not g.two_sided or g.n_freq % 2 or g.n_time != g.n_freq - 1:
        raise GridMismatchError("grid not square-compatible with an oracle operator")
    n = g.n_freq // 2
    F = np.fft.ifft(sym.values.astype(np.complex128), axis=1)
    i, j, mu, s = _index_maps(n)
    A = np.zeros((n, n), dtype=np.complex128)
    A[i, j] = F[mu, s]
    return DenseOperator(0.5 * (A + A.conj().T))


def physical_rows(sym: PhaseSymbol) -> np.ndarray:
    """Integer-sample-time rows of an oracle symbol (j even)."""
    return sym.values[0::2]


def trace_norm(sym_grid: TFGrid) -> float:
    """Normalization constant in tr(AB) = c * sum(S_A * S_B); equals 1/(2n)."""
    return 1.0 / sym_grid.n_freq


def measure_trace_norm(n: int) -> float:
    """Empirical constant from the identity pair, per the fixing convention."""
    ident = DenseOperator(np.eye(n))
    s = weyl_symbol(ident)
    return float(n / (s.values * s.values).sum())


def trace_pair(a: DenseOperator, b: DenseOperator) -> float:
    """tr(AB) for Hermitian operators of equal dimension."""
    if a.n != b.n:
        raise GridMismatchError("operator size mismatch")
    if not (a.is_hermitian() and b.is_hermitian()):
        raise SignalError("trace_pair expects Hermitian operators")
    return float(np.trace(a.matrix @ b.matrix).real)


def trace_pair_symbol(a: DenseOperator, b: DenseOperator) -> float:
    """The same trace evaluated as the normalized symbol-grid sum."""
    sa = weyl_symbol(a)
    sb = weyl_symbol(b)
    return float((sa.values * sb.values).sum() * trace_norm(sa.grid))


def matrix_function(op: DenseOperator, func) -> DenseOperator:
    """f(A) for Hermitian A via eigendecomposition.

    func is a ScalarFunc (domain-checked against the spectrum) or a
    plain callable on eigenvalues.
    """
    if not op.is_hermitian():
        raise SignalError("matrix_function expects a Hermitian operator")
    evals, vecs = np.linalg.eigh(op.matrix)
    fn = getattr(func, "f", func)
    dmin = getattr(func, "domain_min", None)
    if dmin is not None and evals.min() <= dmin:
        raise DomainError(
            f"{getattr(func, 'name', 'func')} undefined at eigenvalue {evals.min()!r}")
    fe = fn(evals)
    return DenseOperator((vecs * fe) @ vecs.conj().T)


def wigner(signal: np.ndarray) -> PhaseSymbol:
    """Symbol of the rank-one projector |psi><psi|.

    Real-valued; the grid sum times 1/(2n) equals ||psi||^2.
    """
    psi = np.asarray(signal, dtype=np.complex128)
    if psi.ndim != 1:
        raise SignalError("signal must be one-dimensional")
    return weyl_symbol(DenseOperator(np.outer(psi, psi.conj())))


def wigner_time_marginal(sym: PhaseSymbol) -> np.ndarray:
    """Sum over f (x cell) on integer-time rows; equals |psi(t)|^2 exactly."""
    return physical_rows(sym).sum(axis=1) / sym.grid.n_freq


def wigner_freq_marginal(sym: PhaseSymbol) -> np.ndarray:
    """Sum over all rows; equals |psi_hat(f_k)|^2 for the 2n-point
    zero-padded DFT psi_hat(k) = sum_t psi(t) e^{-2 pi i k t/(2n)}."""
    return sym.values.sum(axis=0)
