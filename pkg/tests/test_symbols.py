import numpy as np
import pytest

from microlocal import expr as ex
from microlocal.symbols import (
    AmplitudeXYZ,
    FormalSymbol,
    NormParams,
    adjoint_symbol,
    check_homogeneity,
    constant_symbol,
    dump_symbol,
    estimate_norm,
    left_total_symbol,
    load_symbol,
    make_grid,
    moyal_product,
    moyal_sqrt,
    neumann_invert,
    sample_coefficient,
    unit_symbol,
)

X, XI = ex.var(0), ex.var(1)
BOX = ((-1.0, 1.0), (1.0, 2.0))
BOX4 = ((-1.0, 1.0), (1.0, 4.0))


def grid_residual(sym_a, sym_b, box=BOX, n=7):
    g = make_grid(box, n)
    worst = 0.0
    for ca, cb in zip(sym_a.coeffs, sym_b.coeffs):
        va = sample_coefficient(ca, g)
        vb = sample_coefficient(cb, g)
        worst = max(worst, float(np.max(np.abs(va - vb))))
    return worst


def test_norm_constant_one():
    a = constant_symbol(1, 0, 1.0)
    p = NormParams(0.7, 1.3, 5.0, 1, BOX, grid_n=5, max_deriv=3)
    assert estimate_norm(a, p).value == pytest.approx(1.0)


def test_norm_xi_example():
    a = FormalSymbol(1, 1.0, 0, (XI,))
    p = NormParams(1.0, 1.0, 0.0, 1, BOX, grid_n=9, max_deriv=3)
    est = estimate_norm(a, p)
    assert est.value == pytest.approx(2.0)


def test_norm_zero_symbol():
    a = FormalSymbol(1, 0.0, 2, (ex.ZERO, ex.ZERO, ex.ZERO))
    p = NormParams(1.0, 1.0, 0.0, 1, BOX, grid_n=5, max_deriv=2)
    assert estimate_norm(a, p).value == 0.0


def test_norm_report_serialization():
    a = FormalSymbol(1, 1.0, 0, (XI,))
    p = NormParams(1.0, 1.0, 0.0, 1, BOX, grid_n=5, max_deriv=2)
    d = estimate_norm(a, p).to_dict()
    assert set(d) == {"rho", "R", "m", "value", "argmax"}


def test_params_validation():
    with pytest.raises(ValueError):
        NormParams(0.0, 1.0, 0.0, 1, BOX)
    with pytest.raises(ValueError):
        NormParams(1.0, 1.0, 0.0, 1, ((-1.0, 1.0), (-1.0, 1.0)))  # xi box hits 0


def test_moyal_unit_laws():
    a = FormalSymbol(1, 1.0, 2, (XI, ex.mul(X, XI), ex.ZERO))
    u = unit_symbol(1, 2)
    left = moyal_product(u, a, 2)
    right = moyal_product(a, u, 2)
    assert grid_residual(left, a) == 0.0
    assert grid_residual(right, a) == 0.0


def test_moyal_xi_x():
    a = FormalSymbol(1, 1.0, 1, (XI, ex.ZERO))
    b = FormalSymbol(1, 0.0, 1, (X, ex.ZERO))
    c = moyal_product(a, b, 1)
    assert c.coeffs[0] == ex.mul(X, XI)
    assert c.coeffs[1] == ex.const(-1j)
    c_rev = moyal_product(b, a, 1)
    assert c_rev.coeffs[1].is_zero()


def test_commutator_order1_term():
    a = FormalSymbol(1, 1.0, 1, (XI, ex.ZERO))
    b = FormalSymbol(1, 0.0, 1, (X, ex.ZERO))
    cab = moyal_product(a, b, 1)
    cba = moyal_product(b, a, 1)
    diff = ex.sub(cab.coeffs[1], cba.coeffs[1])
    assert diff == ex.const(-1j)


def test_commutator_principal_is_poisson():
    rng = np.random.default_rng(0)
    g = make_grid(BOX, 7)
    for _ in range(4):
        ca = [rng.standard_normal() for _ in range(4)]
        cb = [rng.standard_normal() for _ in range(4)]
        a0 = ex.add(ex.mul(ca[0], X), ex.mul(ca[1], ex.powi(X, 2)),
                    ex.mul(ca[2], ex.mul(X, XI)), ex.mul(ca[3], XI))
        b0 = ex.add(ex.mul(cb[0], XI), ex.mul(cb[1], ex.powi(XI, 2)),
                    ex.mul(cb[2], ex.mul(X, XI)), ex.mul(cb[3], X))
        a = FormalSymbol(1, 2.0, 1, (a0, ex.ZERO))
        b = FormalSymbol(1, 2.0, 1, (b0, ex.ZERO))
        comm1 = ex.sub(moyal_product(a, b, 1).coeffs[1],
                       moyal_product(b, a, 1).coeffs[1])
        poisson = ex.sub(ex.mul(ex.diff(a0, 1), ex.diff(b0, 0)),
                         ex.mul(ex.diff(a0, 0), ex.diff(b0, 1)))
        target = ex.mul(ex.const(-1j), poisson)
        resid = np.max(np.abs(sample_coefficient(ex.sub(comm1, target), g)))
        assert resid <= 1e-8


def test_moyal_associativity_sampled():
    rng = np.random.default_rng(1)
    g = make_grid(BOX, 7)
    for _ in range(3):
        syms = []
        for _s in range(3):
            c = rng.standard_normal(3)
            a0 = ex.add(ex.mul(c[0], X), ex.mul(c[1], XI), ex.mul(c[2], ex.mul(X, XI)))
            a1 = ex.mul(rng.standard_normal(), X)
            syms.append(FormalSymbol(1, 2.0, 2, (a0, a1, ex.ZERO)))
        a, b, c_ = syms
        left = moyal_product(moyal_product(a, b, 2), c_, 2)
        right = moyal_product(a, moyal_product(b, c_, 2), 2)
        assert grid_residual(left, right) <= 1e-8


def test_neumann_invert_examples():
    u = unit_symbol(1, 2)
    iu = neumann_invert(u, 2, BOX)
    assert grid_residual(iu, u) == 0.0
    two = constant_symbol(1, 2, 2.0)
    inv = neumann_invert(two, 2, BOX)
    assert inv.coeffs[0] == ex.const(0.5)
    assert inv.coeffs[1].is_zero() and inv.coeffs[2].is_zero()


def test_neumann_invert_elliptic_chain():
    nx = ex.norm(XI)
    a = FormalSymbol(1, 0.0, 3, (ex.ONE, ex.div(ex.ONE, nx), ex.ZERO, ex.ZERO))
    b = neumann_invert(a, 3, BOX4)
    # b1 = -1/|xi|
    g = make_grid(BOX4, 7)
    v = sample_coefficient(b.coeffs[1], g) + sample_coefficient(ex.div(ex.ONE, nx), g)
    assert np.max(np.abs(v)) <= 1e-12
    chk = moyal_product(a, b, 3)
    assert grid_residual(chk, unit_symbol(1, 3), BOX4) <= 1e-9


def test_neumann_invert_rejects_nonelliptic():
    a = FormalSymbol(1, 0.0, 1, (X, ex.ZERO))  # vanishes inside the box
    with pytest.raises(ValueError):
        neumann_invert(a, 1, BOX)


def test_adjoint_examples():
    # real x-independent symbol is self-adjoint at all orders
    nx = ex.norm(XI)
    a = FormalSymbol(1, 0.0, 2, (ex.ONE, ex.div(ex.ONE, nx), ex.ZERO))
    astar = adjoint_symbol(a)
    assert grid_residual(a, astar, BOX4) <= 1e-14
    # a = x xi: (a*)_0 = x xi, (a*)_1 = -i (phase pinned by the operator
    # adjoint oracle; the +i variant belongs to the opposite-sign quantization)
    axxi = FormalSymbol(1, 1.0, 1, (ex.mul(X, XI), ex.ZERO))
    st = adjoint_symbol(axxi)
    assert st.coeffs[0] == ex.mul(X, XI)
    assert st.coeffs[1] == ex.const(-1j)


def test_adjoint_involution_sampled():
    rng = np.random.default_rng(2)
    g = make_grid(BOX, 7)
    for _ in range(3):
        c = rng.standard_normal(4)
        a0 = ex.add(ex.mul(c[0], ex.powi(X, 2)), ex.mul(c[1], ex.mul(X, XI)))
        a1 = ex.add(ex.mul(c[2], X), ex.mul(c[3], XI))
        a = FormalSymbol(1, 2.0, 2, (a0, a1, ex.ZERO))
        aa = adjoint_symbol(adjoint_symbol(a))
        assert grid_residual(a, aa) <= 1e-10


def test_left_total_symbol():
    Y = ex.var(2)
    a = AmplitudeXYZ(1, 1.0, 1, (ex.mul(Y, XI), ex.ZERO))
    b = left_total_symbol(a, 1)
    assert b.coeffs[0] == ex.mul(X, XI)
    assert b.coeffs[1] == ex.const(-1j)
    # y-independent amplitude: b_j = a_j
    a2 = AmplitudeXYZ(1, 1.0, 1, (ex.mul(X, XI), ex.ZERO))
    b2 = left_total_symbol(a2, 1)
    assert b2.coeffs[0] == ex.mul(X, XI)
    assert b2.coeffs[1].is_zero()


def test_moyal_sqrt_constants():
    one = constant_symbol(1, 2, 1.0)
    r = moyal_sqrt(one, 2, BOX)
    assert not r.diverged
    assert r.symbol.coeffs[0] == ex.ONE
    four = constant_symbol(1, 2, 4.0)
    r = moyal_sqrt(four, 2, BOX)
    assert r.symbol.coeffs[0] == ex.const(2.0)


def test_moyal_sqrt_selfconsistency():
    nx = ex.norm(XI)
    a = FormalSymbol(1, 0.0, 3, (ex.ONE, ex.div(ex.ONE, nx), ex.ZERO, ex.ZERO))
    r = moyal_sqrt(a, 3, BOX4)
    assert not r.diverged
    lhs = moyal_product(adjoint_symbol(r.symbol), r.symbol, 3)
    assert grid_residual(lhs, a, BOX4) <= 1e-8


def test_moyal_sqrt_rejects_nonpositive():
    a = FormalSymbol(1, 0.0, 1, (ex.const(-1.0), ex.ZERO))
    with pytest.raises(ValueError):
        moyal_sqrt(a, 1, BOX)


def test_homogeneity_check():
    nx = ex.norm(XI)
    good = FormalSymbol(1, 1.0, 1, (XI, ex.ONE))
    assert check_homogeneity(good, BOX)
    bad = FormalSymbol(1, 1.0, 1, (XI, XI))  # order 1 should be degree 0
    assert not check_homogeneity(bad, BOX)


def test_symbol_serialization_roundtrip():
    nx = ex.norm(XI)
    a = FormalSymbol(1, 0.5, 2, (ex.ONE, ex.div(ex.ONE, nx), ex.mul(X, XI)))
    text = dump_symbol(a)
    b = load_symbol(text)
    assert b.dim == a.dim and b.d0 == a.d0 and b.order == a.order
    assert all(x == y for x, y in zip(a.coeffs, b.coeffs))


def test_truncation_guards():
    a = FormalSymbol(1, 0.0, 1, (ex.ONE, ex.ZERO))
    b = FormalSymbol(1, 0.0, 2, (ex.ONE, ex.ZERO, ex.ZERO))
    with pytest.raises(ValueError):
        moyal_product(a, b, 2)
    c2 = FormalSymbol(2, 0.0, 1, (ex.ONE, ex.ZERO))
    with pytest.raises(ValueError):
        moyal_product(a, c2, 1)
