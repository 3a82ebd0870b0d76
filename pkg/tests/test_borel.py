import math

import numpy as np
import pytest

from microlocal import expr as ex
from microlocal.borel import (
    borel_sum,
    bump_value,
    cauchy_product_check,
    cutoff_certificate,
    ehrenpreis_cutoffs,
    fit_exponential_rate,
    fit_factorial_rate,
    remainder_profile,
)
from microlocal.symbols import FormalSymbol


def factorial_symbol(K, scale=1.0):
    nx = ex.norm(ex.var(1))
    coeffs = [ex.ONE] + [
        ex.mul(float(math.factorial(k) * scale**k), ex.powi(nx, -k))
        for k in range(1, K + 1)
    ]
    return FormalSymbol(1, 0.0, K, tuple(coeffs))


@pytest.fixture(scope="module")
def family():
    return ehrenpreis_cutoffs((0.0, 1.0), (2.0, 3.0), 12)


@pytest.fixture(scope="module")
def eval_family():
    # values only, high N for the summation gates
    return ehrenpreis_cutoffs((0.0, 1.0), (2.0, 3.0), 27, deriv_max=0)


def test_bump_mass():
    t = np.linspace(-1, 1, 20001)
    assert abs(np.trapezoid(bump_value(t), t) - 1.0) <= 1e-8


def test_single_mollification_range(family):
    chi1 = family.chi[1]
    assert np.all((chi1 >= 0.0) & (chi1 <= 1.0))
    s = np.linspace(0.0, 1.0, 21)
    assert np.max(np.abs(family.value(1, s) - 1.0)) <= 1e-12
    assert np.max(np.abs(family.value(1, np.linspace(2.0, 3.0, 21)))) <= 1e-12


def test_certificate_all_pairs(family):
    cert = cutoff_certificate(family)
    assert cert["pass"]
    # the N = 8 root-growth form of the bound
    for j in range(1, 9):
        got = np.max(np.abs(family.deriv[(8, j)]))
        assert got ** (1.0 / j) / 8.0 <= family.rho + 1e-9


def test_geometry_guards():
    with pytest.raises(ValueError):
        ehrenpreis_cutoffs((0.0, 2.0), (2.0, 3.0), 4)  # touching sets
    with pytest.raises(ValueError):
        ehrenpreis_cutoffs((0.0, 1.0), (2.0, 3.0), 8, h=0.2)  # too coarse


def test_single_term_realisation(eval_family):
    a0 = FormalSymbol(1, 0.0, 0, (ex.ONE,))
    r = borel_sum(a0, 0.25, eval_family)
    th = np.array([0.5, 4.0, 9.0, 100.0])
    vals = r.eval(np.zeros(1), th).real
    assert vals[0] == 0.0  # cutoff kills the term near the origin
    assert abs(vals[2] - 1.0) <= 1e-12  # fully on for theta >= 2/c
    assert abs(vals[3] - 1.0) <= 1e-12


def test_factorial_rate_fit():
    a = factorial_symbol(20)
    C, R = fit_factorial_rate(a)
    assert abs(C - 1.0) <= 1e-6
    assert abs(R - 1.0) <= 1e-6
    a2 = factorial_symbol(20, scale=2.0)
    _, R2 = fit_factorial_rate(a2)
    assert abs(R2 - 2.0) <= 1e-6


def test_cutoff_scale_guard(eval_family):
    a2 = factorial_symbol(20, scale=2.0)  # R_fit = 2, so c <= 1/8
    with pytest.raises(ValueError):
        borel_sum(a2, 0.25, eval_family)
    warnings = []
    borel_sum(a2, 0.25, eval_family, warn=warnings.append)
    assert warnings


def test_remainder_model(eval_family):
    a = factorial_symbol(25)
    r = borel_sum(a, 1.0 / 8.0, eval_family)
    theta = np.geomspace(20.0, 200.0, 25)
    prof = remainder_profile(r, 10, theta)
    assert prof["fit_quality"] <= 0.25
    assert 0.25 <= prof["rho"] <= 4.0  # within factor 4 of the generating rate 1
    assert prof["C_global"] < 1e4


def test_zero_symbol_profile(eval_family):
    z = FormalSymbol(1, 0.0, 3, (ex.ZERO,) * 4)
    r = borel_sum(z, 0.1, eval_family)
    theta = np.geomspace(20.0, 100.0, 10)
    prof = remainder_profile(r, 3, theta)
    assert np.max(prof["residuals"]) == 0.0
    assert prof["n_samples"] == 0


def test_realisation_independence(eval_family):
    a = factorial_symbol(25)
    theta = np.geomspace(20.0, 200.0, 25)
    r1 = borel_sum(a, 1.0 / 8.0, eval_family)
    r2 = borel_sum(a, 1.0 / 16.0, eval_family)
    diff = r1.eval(np.zeros(1), theta) - r2.eval(np.zeros(1), theta)
    fit = fit_exponential_rate(theta, diff)
    assert fit["eps"] >= 0.01
    assert fit["n_samples"] >= 5


def test_cauchy_product_unit(eval_family):
    a = factorial_symbol(25)
    u = FormalSymbol(1, 0.0, 25, (ex.ONE,) + (ex.ZERO,) * 25)
    theta = np.geomspace(20.0, 200.0, 15)
    rep = cauchy_product_check(a, u, 1.0 / 8.0, eval_family, theta, 6)
    # product with the unit realisation keeps the factorial model
    assert rep["fit_quality"] <= 0.25


def test_cauchy_product_halfscale(eval_family):
    ab = factorial_symbol(25, scale=0.5)
    theta = np.geomspace(20.0, 200.0, 25)
    rep = cauchy_product_check(ab, ab, 1.0 / 8.0, eval_family, theta, 8)
    assert rep["fit_quality"] <= 0.25
