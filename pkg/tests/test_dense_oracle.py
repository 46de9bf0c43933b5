import numpy as np
import pytest

from psycodec.dense_oracle import (DenseOperator, inverse_weyl, matrix_function,
                                   measure_trace_norm, oracle_grid,
                                   physical_rows, trace_norm, trace_pair,
                                   trace_pair_symbol, weyl_symbol, wigner,
                                   wigner_freq_marginal, wigner_time_marginal)
from psycodec.errors import DomainError, GridMismatchError, SignalError
from psycodec.grid import PhaseSymbol
from psycodec.phase_space import SQRT, symbol_function


def random_hermitian(n, seed=0):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return DenseOperator((a + a.conj().T) / 2)


def bv_field(n, planck, eps=0.4):
    """exp of a separable cosine field: bounded variation by construction.

    The frequency harmonic is even, so the field is exactly representable
    on the integer-sample parity channel (sampling at unit steps aliases
    f and f + 1/2; parity-clean fields have f-period 1/2).
    """
    target = n / (2 * np.pi * eps ** 2 * planck)
    qf = max(2, 2 * int(round(np.sqrt(target) / 2)))
    qt = max(1, int(round(target / qf)))
    g = oracle_grid(n)
    tau = np.arange(g.n_time) / 2.0
    f = np.arange(g.n_freq) / g.n_freq
    T, F = np.meshgrid(tau, f, indexing="ij")
    m = n // 8
    w = np.ones(g.n_time)
    ramp = 0.5 - 0.5 * np.cos(np.pi * np.arange(2 * m) / (2 * m))
    w[:2 * m] = ramp
    w[-2 * m:] = ramp[::-1]
    field = np.exp(eps * np.cos(2 * np.pi * qt * T / n)
                   * np.cos(2 * np.pi * qf * F) * w[:, None])
    at = n / (2 * np.pi * eps * qt)
    af = 1.0 / (2 * np.pi * eps * qf)
    return PhaseSymbol(g, field, check=False), 2 * np.pi * at * af, m


# ----------------------------------------------------------------------
# weyl_symbol / inverse_weyl
# ----------------------------------------------------------------------

def test_identity_symbol_is_one_on_physical_rows():
    n = 64
    s = weyl_symbol(DenseOperator(np.eye(n)))
    assert np.all(physical_rows(s) == 1.0)
    # half-sample rows are the odd-antidiagonal channel: empty for I
    assert np.all(s.values[1::2] == 0.0)


def test_all_ones_symbol_quantizes_to_identity():
    n = 64
    g = oracle_grid(n)
    op = inverse_weyl(PhaseSymbol.constant(g, 1.0))
    assert np.abs(op.matrix - np.eye(n)).max() < 1e-14


def test_diagonal_operator_symbol():
    n = 64
    a = np.random.default_rng(1).normal(size=n)
    s = weyl_symbol(DenseOperator(np.diag(a)))
    # f-independent, equal to a(t) at the sample times
    assert np.abs(physical_rows(s) - a[:, None]).max() < 1e-12
    assert np.abs(s.values - s.values[:, :1]).max() < 1e-12


def test_random_hermitian_round_trip():
    op = random_hermitian(128, seed=2)
    back = inverse_weyl(weyl_symbol(op))
    assert np.abs(back.matrix - op.matrix).max() \
        <= 1e-10 * np.abs(op.matrix).max()


def test_symbol_round_trip_from_symbol_side():
    op = random_hermitian(96, seed=3)
    sym = weyl_symbol(op)
    again = weyl_symbol(inverse_weyl(sym))
    assert np.abs(again.values - sym.values).max() \
        <= 1e-10 * np.abs(sym.values).max()


def test_hermitian_gives_real_symbol_and_back():
    sym, _, _ = bv_field(64, 20)
    op = inverse_weyl(sym)
    assert op.is_hermitian()


def test_filter_symbol_gives_toeplitz():
    n = 64
    g = oracle_grid(n)
    k = np.arange(g.n_freq)
    b = 1.0 + 0.5 * np.cos(2 * np.pi * k / g.n_freq) \
        + 0.2 * np.cos(4 * np.pi * k / g.n_freq)
    sym = PhaseSymbol(g, np.tile(b, (g.n_time, 1)))
    op = inverse_weyl(sym)
    # oracle: the DFT-diagonal construction on the doubled frequency axis,
    # cropped to the matrix extent
    c = np.fft.ifft(b)
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    direct = c[(i - j) % g.n_freq]
    assert np.abs(op.matrix - direct).max() < 1e-12
    assert op.is_hermitian()


def test_inverse_weyl_rejects_bad_grid():
    from psycodec.grid import TFGrid

    bad = TFGrid(sample_rate=1.0, hop=0.5, n_time=10, n_freq=12,
                 freq_step=1.0 / 12, two_sided=True)
    with pytest.raises(GridMismatchError):
        inverse_weyl(PhaseSymbol.constant(bad, 1.0))


def test_weyl_symbol_odd_dimension_rejected():
    with pytest.raises(GridMismatchError):
        weyl_symbol(DenseOperator(np.eye(63)))


# ----------------------------------------------------------------------
# matrix_function
# ----------------------------------------------------------------------

def test_matrix_function_sqrt_identity():
    out = matrix_function(DenseOperator(np.eye(32)), SQRT)
    assert np.abs(out.matrix - np.eye(32)).max() < 1e-12


def test_matrix_function_sqrt_involution():
    op = random_hermitian(64, seed=4)
    shifted = DenseOperator(op.matrix + 20.0 * np.eye(64))  # make PSD
    root = matrix_function(shifted, SQRT)
    back = root.matrix @ root.matrix
    assert np.abs(back - shifted.matrix).max() <= 1e-8 * np.abs(shifted.matrix).max()


def test_matrix_function_inverse_residual():
    op = random_hermitian(64, seed=5)
    shifted = DenseOperator(op.matrix + 20.0 * np.eye(64))
    inv = matrix_function(shifted, lambda x: 1.0 / x)
    assert np.linalg.norm(shifted.matrix @ inv.matrix - np.eye(64)) <= 1e-8


def test_matrix_function_domain_error():
    with pytest.raises(DomainError, match="eigenvalue"):
        matrix_function(DenseOperator(np.diag([1.0, -1.0])), SQRT)


def test_matrix_function_requires_hermitian():
    with pytest.raises(SignalError):
        matrix_function(DenseOperator(np.array([[0.0, 1.0], [0.0, 0.0]])), SQRT)


# ----------------------------------------------------------------------
# sofoo validation: sqrt of symbol vs symbol of sqrt
# ----------------------------------------------------------------------

def test_sofoo_error_shrinks_with_planck_product():
    errs = []
    for planck in (10, 40, 160):
        sym, actual, m = bv_field(256, planck)
        op = inverse_weyl(sym)
        root = matrix_function(op, SQRT)
        s_root = weyl_symbol(root)
        ref = np.sqrt(sym.values)
        rows = np.arange(2 * m + 8, sym.grid.n_time - 2 * m - 8)
        rows = rows[rows % 2 == 0]
        rel = np.abs(s_root.values[rows] - ref[rows]) / ref[rows]
        errs.append(rel.max())
    assert errs[0] > errs[1] > errs[2]
    assert errs[1] < 0.05


def test_order1_correction_reduces_sofoo_error():
    sym, planck, m = bv_field(256, 12)
    op = inverse_weyl(sym)
    exact = weyl_symbol(matrix_function(op, SQRT))
    rows = np.arange(2 * m + 8, sym.grid.n_time - 2 * m - 8)
    rows = rows[rows % 2 == 0]  # physical sample times
    errs = {}
    for order in (0, 1):
        approx = symbol_function(sym, SQRT, order)
        errs[order] = np.abs(approx.values[rows] - exact.values[rows]).max()
    assert errs[1] < errs[0]


# ----------------------------------------------------------------------
# wigner
# ----------------------------------------------------------------------

def test_wigner_impulse_concentrated_row():
    n = 64
    psi = np.zeros(n)
    psi[20] = 1.0
    w = wigner(psi)
    assert np.all(w.values[2 * 20] == 1.0)
    others = np.delete(np.arange(w.grid.n_time), 2 * 20)
    assert np.abs(w.values[others]).max() == 0.0


def test_wigner_gaussian_tone_bump():
    # analytic Gaussian wave packet: the one case whose Wigner function
    # is a nonnegative 2D Gaussian bump
    n = 256
    t = np.arange(n)
    k0 = 32
    psi = np.exp(-((t - n / 2) ** 2) / (2 * 18.0 ** 2)) \
        * np.exp(2j * np.pi * k0 * t / n)
    w = wigner(psi)
    vals = physical_rows(w)
    i, k = np.unravel_index(np.argmax(vals), vals.shape)
    assert abs(i - n // 2) <= 2
    assert abs(k - 2 * k0) <= 2  # f = k0/n = (2 k0)/(2n)
    assert vals.min() >= -1e-6 * vals.max()
    # Wigner time profile of a sigma-width amplitude Gaussian: exp(-t^2/sigma^2)
    trow = vals[:, k]
    assert trow[i + 18] / trow[i] == pytest.approx(np.exp(-1.0), rel=0.05)


def test_wigner_two_tones_interference_fringes():
    n = 256
    t = np.arange(n)
    psi = np.cos(2 * np.pi * 20 * t / n) + np.cos(2 * np.pi * 60 * t / n)
    w = wigner(np.exp(-((t - n / 2) ** 2) / (2 * 40.0 ** 2)) * psi)
    vals = physical_rows(w)
    mid_band = vals[n // 2, 70:90]  # between 2*20=40 and 2*60=120: bin 80
    assert mid_band.max() > 0 and mid_band.min() < 0
    assert np.abs(mid_band).max() > 0.05 * vals.max()


def test_wigner_marginals_and_norm():
    n = 128
    rng = np.random.default_rng(6)
    psi = rng.normal(size=n) + 1j * rng.normal(size=n)
    w = wigner(psi)
    tm = wigner_time_marginal(w)
    assert np.abs(tm - np.abs(psi) ** 2).max() <= 1e-8 * (np.abs(psi) ** 2).max()
    fm = wigner_freq_marginal(w)
    zp = np.fft.fft(np.r_[psi, np.zeros(n)])  # e^{-2 pi i k t/(2n)}
    assert np.abs(fm - np.abs(zp) ** 2).max() <= 1e-8 * (np.abs(zp) ** 2).max()
    total = w.values.sum() * trace_norm(w.grid)
    assert total == pytest.approx(np.vdot(psi, psi).real, rel=1e-12)


# ----------------------------------------------------------------------
# trace_pair
# ----------------------------------------------------------------------

def test_trace_identity_pair():
    n = 64
    ident = DenseOperator(np.eye(n))
    assert trace_pair(ident, ident) == pytest.approx(n)
    assert trace_pair_symbol(ident, ident) == pytest.approx(n, rel=1e-12)


def test_trace_orthogonal_projectors():
    n = 64
    rng = np.random.default_rng(7)
    v1 = rng.normal(size=n)
    v2 = rng.normal(size=n)
    v2 -= v1 * (v1 @ v2) / (v1 @ v1)
    p1 = DenseOperator(np.outer(v1, v1))
    p2 = DenseOperator(np.outer(v2, v2))
    assert abs(trace_pair(p1, p2)) <= 1e-10 * (v1 @ v1) * (v2 @ v2)
    assert abs(trace_pair_symbol(p1, p2)) <= 1e-8 * (v1 @ v1) * (v2 @ v2)


def test_trace_random_pair_symbol_sum_agrees():
    a = random_hermitian(128, seed=8)
    b = random_hermitian(128, seed=9)
    direct = trace_pair(a, b)
    via_symbols = trace_pair_symbol(a, b)
    assert abs(direct - via_symbols) <= 1e-8 * abs(direct)


def test_trace_normalization_measured_once_matches_fixed():
    for n in (32, 64, 128):
        assert measure_trace_norm(n) == pytest.approx(trace_norm(oracle_grid(n)),
                                                      rel=1e-12)


def test_trace_pair_size_mismatch():
    with pytest.raises(GridMismatchError):
        trace_pair(DenseOperator(np.eye(4)), DenseOperator(np.eye(6)))
