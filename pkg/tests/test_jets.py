import math

import numpy as np
import pytest

from microlocal import expr as ex
from microlocal.jets import Jet, derivative_at, jet_arith, jet_from_expr
from microlocal.multiindex import count, index_of, multi_indices


def test_multiindex_layout():
    idx = multi_indices(2, 2)
    assert idx == ((0, 0), (0, 1), (1, 0), (0, 2), (1, 1), (2, 0))
    assert count(2, 2) == 6
    for i, a in enumerate(idx):
        assert index_of(a, 2) == i


def test_exp_jet():
    j = jet_from_expr(ex.exp(ex.var(0)), [0.0], 2)
    assert np.allclose(j.coeffs, [1.0, 1.0, 0.5])


def test_polynomial_identity():
    e = ex.mul(ex.add(1, ex.var(0)), ex.sub(1, ex.var(0)))
    j = jet_from_expr(e, [0.0], 2)
    assert np.allclose(j.coeffs, [1.0, 0.0, -1.0])


def test_sin_cos_derivative():
    e = ex.mul(ex.sin(ex.var(0)), ex.cos(ex.var(0)))
    j = jet_from_expr(e, [0.0], 1)
    assert abs(j.coeffs[1] - 1.0) < 1e-14


def test_mul_exp_inverse():
    a = jet_from_expr(ex.exp(ex.var(0)), [0.0], 4)
    b = jet_from_expr(ex.exp(ex.neg(ex.var(0))), [0.0], 4)
    c = jet_arith(a, b, "mul")
    expect = np.zeros(5)
    expect[0] = 1.0
    assert np.allclose(c.coeffs, expect, atol=1e-15)


def test_div_geometric():
    one = jet_from_expr(ex.ONE, [0.0], 3)
    denom = jet_from_expr(ex.sub(1, ex.var(0)), [0.0], 3)
    c = jet_arith(one, denom, "div")
    assert np.allclose(c.coeffs, [1.0, 1.0, 1.0, 1.0])


def test_add_cancel():
    a = jet_from_expr(ex.var(0), [0.0], 2)
    b = jet_from_expr(ex.neg(ex.var(0)), [0.0], 2)
    c = jet_arith(a, b, "add")
    assert np.allclose(c.coeffs, 0.0)


def test_derivative_at_examples():
    j = jet_from_expr(ex.powi(ex.var(0), 2), [0.0], 2)
    assert derivative_at(j, (2,)) == pytest.approx(2.0)
    j2 = jet_from_expr(ex.exp(ex.mul(ex.var(0), ex.var(1))), [0.0, 0.0], 2)
    assert derivative_at(j2, (1, 1)) == pytest.approx(1.0)
    z = Jet(1, 2, np.zeros(1), np.zeros(3))
    assert derivative_at(z, (1,)) == 0.0


def test_derivative_order_guard():
    j = jet_from_expr(ex.var(0), [0.0], 2)
    with pytest.raises(ValueError):
        derivative_at(j, (3,))


def test_shape_mismatch_guard():
    a = jet_from_expr(ex.var(0), [0.0], 2)
    b = jet_from_expr(ex.var(0), [0.0], 3)
    with pytest.raises(ValueError):
        jet_arith(a, b, "add")


def test_div_by_zero_constant_term():
    a = jet_from_expr(ex.ONE, [0.0], 2)
    b = jet_from_expr(ex.var(0), [0.0], 2)
    with pytest.raises(ex.DomainError):
        jet_arith(a, b, "div")


def test_random_polynomial_exactness():
    rng = np.random.default_rng(5)
    for _ in range(10):
        d, K = 2, 4
        coeffs = {}
        terms = []
        for alpha in multi_indices(d, K):
            c = rng.standard_normal()
            coeffs[alpha] = c
            factors = [ex.const(c)]
            for i, a in enumerate(alpha):
                if a:
                    factors.append(ex.powi(ex.var(i), a))
            terms.append(ex.mul(*factors))
        e = ex.add(*terms)
        j = jet_from_expr(e, [0.0, 0.0], K)
        for alpha, c in coeffs.items():
            got = j.coefficient(alpha)
            assert abs(got - c) <= 1e-12 * max(1.0, abs(c))


def test_leibniz_consistency():
    rng = np.random.default_rng(6)
    x, y = ex.var(0), ex.var(1)
    a = ex.add(ex.exp(ex.mul(0.3, x)), ex.mul(ex.sin(y), x))
    b = ex.add(ex.cos(ex.mul(0.5, x)), ex.mul(y, y, x))
    center = rng.uniform(-0.5, 0.5, 2)
    order = 4
    ja = jet_from_expr(a, center, order)
    jb = jet_from_expr(b, center, order)
    jab = jet_arith(ja, jb, "mul")
    for alpha in multi_indices(2, order):
        total = 0.0
        for beta in multi_indices(2, sum(alpha)):
            if any(bi > ai for bi, ai in zip(beta, alpha)):
                continue
            binom = 1.0
            for ai, bi in zip(alpha, beta):
                binom *= math.comb(ai, bi)
            rem = tuple(ai - bi for ai, bi in zip(alpha, beta))
            total += binom * derivative_at(ja, beta) * derivative_at(jb, rem)
        got = derivative_at(jab, alpha)
        assert abs(got - total) <= 1e-10 * max(1.0, abs(total))


def test_chain_consistency_exp():
    rng = np.random.default_rng(7)
    x = ex.var(0)
    inner = ex.add(ex.mul(0.4, x), ex.mul(-0.7, ex.powi(x, 2)),
                   ex.mul(0.2, ex.powi(x, 3)))
    e = ex.exp(inner)
    center = rng.uniform(-0.3, 0.3, 1)
    j_direct = jet_from_expr(e, center, 5)
    # compose exp with the inner jet through jet arithmetic: exp(g) solves
    # the same truncated series, evaluated independently via finite products
    g = jet_from_expr(inner, center, 5)
    w = g.coeffs.copy()
    g0 = w[0]
    w[0] = 0.0
    acc = np.zeros_like(w)
    acc[0] = 1.0
    powk = acc.copy()
    wj = Jet(1, 5, center, w)
    pj = Jet(1, 5, center, powk)
    total = np.zeros_like(w)
    total[0] = 1.0
    for k in range(1, 6):
        pj = jet_arith(pj, wj, "mul")
        total = total + pj.coeffs / math.factorial(k)
    total = total * np.exp(g0)
    assert np.max(np.abs(total - j_direct.coeffs)) <= 1e-10


def test_radial_node_guard_near_origin():
    e = ex.norm(ex.var(0), ex.var(1))
    with pytest.raises(ex.DomainError):
        jet_from_expr(e, [1e-9, 0.0], 2)
    j = jet_from_expr(e, [3.0, 4.0], 2)
    assert abs(j.value() - 5.0) < 1e-14
    assert abs(derivative_at(j, (1, 0)) - 0.6) < 1e-14
