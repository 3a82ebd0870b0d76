import numpy as np
import pytest

from microlocal import expr as ex
from microlocal.quantize import (
    BandLimit,
    GridFunction,
    commutator_matrix,
    commutator_residual,
    mode_numbers,
    moyal_consistency,
    op_apply,
    windowed_mode,
)
from microlocal.symbols import FormalSymbol, unit_symbol

L, M = 48.0, 2048
BAND = BandLimit(192)
X, XI = ex.var(0), ex.var(1)


def mode_vector(g, band):
    f = mode_numbers(band)
    return np.fft.fft(g.values)[np.mod(f, g.size)]


def test_gridfunction_validation():
    with pytest.raises(ValueError):
        GridFunction(1.0, np.zeros(100))  # not a power of two
    with pytest.raises(ValueError):
        GridFunction(1.0, np.array([np.nan] + [0.0] * 127))
    with pytest.raises(ValueError):
        BandLimit(0)


def test_band_guard():
    u = windowed_mode(L, 256, 5, BandLimit(32))
    with pytest.raises(ValueError):
        op_apply(unit_symbol(1, 0), u, BandLimit(128))


def test_identity_band_limited():
    u = windowed_mode(L, M, 12, BAND)
    r = op_apply(unit_symbol(1, 0), u, BAND)
    assert np.max(np.abs(r.values - u.values)) <= 1e-12


def test_fourier_multiplier_single_mode():
    x = np.arange(M) * (L / M)
    mode = 20
    u = GridFunction(L, np.exp(1j * 2 * np.pi * mode * x / L))
    a = FormalSymbol(1, 1.0, 0, (XI,))
    r = op_apply(a, u, BAND)
    target = (2 * np.pi * mode / L) * u.values
    assert np.max(np.abs(r.values - target)) <= 1e-12 * np.max(np.abs(target))


def test_multiplication_symbol_matches_direct_product():
    u = windowed_mode(L, M, 25, BandLimit(BAND.F // 4))
    a = FormalSymbol(1, 0.0, 0, (ex.sin(ex.mul(2 * np.pi / L, X)),))
    r = op_apply(a, u, BAND)
    x = np.arange(M) * (L / M)
    direct = np.sin(2 * np.pi * x / L) * u.values
    # residual dominated by re-band-limiting of the product
    assert np.max(np.abs(r.values - direct)) <= 1e-10


def test_linearity():
    u = windowed_mode(L, M, 30, BandLimit(BAND.F // 4))
    v = windowed_mode(L, M, -22, BandLimit(BAND.F // 4))
    a = FormalSymbol(1, 1.0, 1, (XI, ex.mul(ex.cos(ex.mul(2 * np.pi / L, X)), ex.powi(ex.norm(XI), -1))))
    uv = GridFunction(L, 0.3 * u.values + 1.7 * v.values)
    lhs = op_apply(a, uv, BAND).values
    rhs = 0.3 * op_apply(a, u, BAND).values + 1.7 * op_apply(a, v, BAND).values
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * np.max(np.abs(rhs))


def test_convention_lock():
    ax = FormalSymbol(1, 0.0, 0, (X,))
    axi = FormalSymbol(1, 1.0, 0, (XI,))
    Xm = commutator_matrix(ax, BAND, L, M)
    XIm = commutator_matrix(axi, BAND, L, M)
    f = mode_numbers(BAND)
    vecs = [mode_vector(windowed_mode(L, M, m0, BandLimit(BAND.F // 2)), BAND)
            for m0 in (30, 45, 60, -35, -55)]
    res = commutator_residual(Xm, XIm, 1j * np.eye(f.size), vecs)
    assert res <= 1e-10


def test_commutator_matrix_examples():
    # identity symbol -> identity matrix
    Im = commutator_matrix(unit_symbol(1, 0), BandLimit(8), L, 256)
    assert np.max(np.abs(Im - np.eye(17))) <= 1e-12
    # xi symbol -> diagonal of clamped mode frequencies
    axi = FormalSymbol(1, 1.0, 0, (XI,))
    D = commutator_matrix(axi, BandLimit(8), L, 256)
    f = mode_numbers(BandLimit(8))
    xi = 2 * np.pi * f / L
    sgn = np.where(xi >= 0, 1.0, -1.0)
    xi_eff = np.where(np.abs(xi) >= 1.0, xi, sgn)
    assert np.max(np.abs(D - np.diag(xi_eff))) <= 1e-12


def test_dense_guard():
    axi = FormalSymbol(1, 1.0, 0, (XI,))
    with pytest.raises(ValueError):
        commutator_matrix(axi, BandLimit(3000), L, 8192)


def test_moyal_consistency_xi_x():
    a = FormalSymbol(1, 1.0, 1, (XI, ex.ZERO))
    b = FormalSymbol(1, 0.0, 1, (X, ex.ZERO))
    u = windowed_mode(L, M, 30, BandLimit(BAND.F // 4))
    rep = moyal_consistency(a, b, 1, u, BAND)
    assert rep["eps"][0] > 1e-3
    assert rep["eps"][1] <= 1e-8
    assert rep["u_tail"] <= 1e-10


def test_moyal_consistency_unit_pair():
    u = windowed_mode(L, M, 30, BandLimit(BAND.F // 4))
    one = unit_symbol(1, 2)
    rep = moyal_consistency(one, one, 2, u, BandLimit(384))
    assert max(rep["eps"]) <= 1e-12


def test_elliptic_corpus_geometric_decay():
    w = 2 * np.pi / L
    nx = ex.norm(XI)
    band = BandLimit(384)
    a = FormalSymbol(1, 0.0, 4, (
        ex.add(1, ex.mul(0.3, ex.cos(ex.mul(w, X)))),
        ex.div(ex.mul(0.5, ex.sin(ex.mul(w, X))), nx),
        ex.div(ex.mul(0.2, ex.cos(ex.mul(2 * w, X))), ex.powi(nx, 2)),
        ex.ZERO, ex.ZERO))
    b = FormalSymbol(1, 0.0, 4, (
        ex.add(1, ex.mul(0.2, ex.sin(ex.mul(w, X)))),
        ex.div(ex.mul(0.4, ex.cos(ex.mul(w, X))), nx),
        ex.ZERO, ex.ZERO, ex.ZERO))
    u = windowed_mode(L, M, 60, BandLimit(band.F // 4))
    rep = moyal_consistency(a, b, 4, u, band)
    eps = rep["eps"]
    for k in range(4):
        assert eps[k + 1] <= eps[k] * (1 + 1e-9) + 1e-12
    assert eps[4] <= 1e-6


def test_total_symbol_against_amplitude_oracle():
    # Op of an (x, xi, y) amplitude kernel agrees with Op of its left total
    # symbol on band-limited interior data
    from microlocal.quantize import op_apply_amplitude
    from microlocal.symbols import AmplitudeXYZ, left_total_symbol

    M_small, band = 512, BandLimit(96)
    Y = ex.var(2)
    a3 = AmplitudeXYZ(1, 1.0, 1, (ex.mul(Y, XI), ex.ZERO))
    b = left_total_symbol(a3, 1)  # b0 = x xi, b1 = -i
    u = windowed_mode(L, M_small, 20, BandLimit(band.F // 2))
    lhs = op_apply_amplitude(a3, u, band)
    rhs = op_apply(b, u, band)
    scale = np.max(np.abs(rhs.values))
    assert np.max(np.abs(lhs.values - rhs.values)) <= 1e-6 * scale


def test_amplitude_oracle_reduces_to_symbol_when_y_free():
    from microlocal.quantize import op_apply_amplitude
    from microlocal.symbols import AmplitudeXYZ

    M_small, band = 512, BandLimit(96)
    a3 = AmplitudeXYZ(1, 1.0, 0, (ex.mul(ex.var(0), XI),))
    a = FormalSymbol(1, 1.0, 0, (ex.mul(ex.var(0), XI),))
    u = windowed_mode(L, M_small, 15, BandLimit(band.F // 2))
    lhs = op_apply_amplitude(a3, u, band)
    rhs = op_apply(a, u, band)
    assert np.max(np.abs(lhs.values - rhs.values)) <= 1e-10


def test_adjoint_against_matrix_dagger():
    # Op(a*) equals the conjugate transpose of Op(a) on interior vectors,
    # pinning the (-i)^|mu| phase of the formal adjoint
    from microlocal.symbols import adjoint_symbol

    M_small, band = 1024, BandLimit(128)
    a = FormalSymbol(1, 1.0, 1, (ex.mul(X, XI), ex.ZERO))
    A = commutator_matrix(a, band, L, M_small)
    Astar = commutator_matrix(adjoint_symbol(a), band, L, M_small)
    f = mode_numbers(band)
    vecs = [np.fft.fft(windowed_mode(L, M_small, m0, BandLimit(band.F // 2)).values)[np.mod(f, M_small)]
            for m0 in (25, 40, -30)]
    C = A.conj().T - Astar
    worst = max(float(np.linalg.norm(C @ v) / np.linalg.norm(v)) for v in vecs)
    assert worst <= 1e-8
