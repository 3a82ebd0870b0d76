"""Truncated multivariate Taylor jets with exact forward propagation.

A jet of order K at a center point stores the Taylor coefficients
``coeff[alpha] = d^alpha f(center) / alpha!`` for all ``|alpha| <= K`` in the
graded-lexicographic layout of :mod:`microlocal.multiindex`.  Jets of
expression trees are computed by propagating the arithmetic through the tree;
no finite differences are involved anywhere, so high-order derivatives keep
full double precision (up to truncated-series conditioning).

All arithmetic is complex.  The batch variants evaluate one expression at
many centers at once; coefficients then carry a trailing batch axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import expr as ex
from .multiindex import (
    count,
    div_lists,
    factorial_multi,
    index_of,
    mul_table,
    multi_indices,
)

__all__ = ["Jet", "jet_from_expr", "jet_batch_from_expr", "jet_arith", "derivative_at"]


@dataclass(frozen=True)
class Jet:
    """Order-``order`` Taylor jet at ``center`` in ``dim`` variables."""

    dim: int
    order: int
    center: np.ndarray  # shape (dim,), complex
    coeffs: np.ndarray  # shape (count(dim, order),), complex

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (count(self.dim, self.order),):
            raise ValueError(
                f"coefficient table must have {count(self.dim, self.order)} entries, got {c.shape}"
            )
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "center", np.asarray(self.center, dtype=complex).reshape(self.dim))

    def coefficient(self, alpha) -> complex:
        return complex(self.coeffs[index_of(tuple(alpha), self.order)])

    def value(self) -> complex:
        return complex(self.coeffs[0])


# ---------------------------------------------------------------------------
# raw coefficient-array kernels; arrays have shape (n_idx,) + batch
# ---------------------------------------------------------------------------


def _zero(dim, order, batch):
    return np.zeros((count(dim, order),) + batch, dtype=complex)


def _jmul(a, b, dim, order):
    ia, ib, ic = mul_table(dim, order)
    out = np.zeros_like(a)
    np.add.at(out, ic, a[ia] * b[ib])
    return out


def _jdiv(a, b, dim, order):
    b0 = b[0]
    if np.any(np.abs(b0) < 1e-300):
        raise ex.DomainError("jet division by jet with zero constant term")
    lists = div_lists(dim, order)
    out = np.zeros_like(a)
    for ic, rows in enumerate(lists):
        acc = a[ic].copy()
        for ib, irem in rows:
            acc -= b[ib] * out[irem]
        out[ic] = acc / b0
    return out


def _jpowi(a, n, dim, order):
    if n == 0:
        out = np.zeros_like(a)
        out[0] = 1.0
        return out
    if n < 0:
        inv = _jdiv(_const_like(a, 1.0), a, dim, order)
        return _jpowi(inv, -n, dim, order)
    result = None
    base = a
    while n:
        if n & 1:
            result = base if result is None else _jmul(result, base, dim, order)
        n >>= 1
        if n:
            base = _jmul(base, base, dim, order)
    return result


def _const_like(a, c):
    out = np.zeros_like(a)
    out[0] = c
    return out


def _compose_series(fk, w, dim, order):
    """Horner evaluation of sum_k fk[k] * w^k with w[0] == 0.

    ``fk`` has shape (order+1,) + batch and holds f^(k)(w0)/k!.
    """
    out = _const_like(w, 0.0)
    out[0] = fk[order]
    for k in range(order - 1, -1, -1):
        out = _jmul(out, w, dim, order)
        out[0] += fk[k]
    return out


def _univariate_coeffs(kind, w0, order, payload=None):
    """Taylor coefficients f^(k)(w0)/k!, k = 0..order, vectorised over w0."""
    w0 = np.asarray(w0, dtype=complex)
    fk = np.zeros((order + 1,) + w0.shape, dtype=complex)
    if kind == "exp":
        e = np.exp(w0)
        for k in range(order + 1):
            fk[k] = e / math.factorial(k)
    elif kind == "log":
        if np.any(np.abs(w0) < 1e-300):
            raise ex.DomainError("log jet at zero")
        fk[0] = np.log(w0)
        ipow = np.ones_like(w0)
        for k in range(1, order + 1):
            ipow = ipow / w0
            fk[k] = ((-1.0) ** (k - 1)) / k * ipow
    elif kind in ("sin", "cos"):
        s, c = np.sin(w0), np.cos(w0)
        cycle = [s, c, -s, -c] if kind == "sin" else [c, -s, -c, s]
        for k in range(order + 1):
            fk[k] = cycle[k % 4] / math.factorial(k)
    elif kind in ("sinh", "cosh"):
        s, c = np.sinh(w0), np.cosh(w0)
        for k in range(order + 1):
            pick = s if (k % 2 == 0) == (kind == "sinh") else c
            fk[k] = pick / math.factorial(k)
    elif kind == "powr":
        p = payload
        if np.any(np.abs(w0) < 1e-300):
            raise ex.DomainError("real power jet at zero")
        falling = 1.0
        for k in range(order + 1):
            fk[k] = falling * w0 ** (p - k) / math.factorial(k)
            falling *= p - k
    else:  # pragma: no cover
        raise ValueError(kind)
    return fk


def _compose_unary(kind, a, dim, order, payload=None):
    w0 = a[0].copy()
    fk = _univariate_coeffs(kind, w0, order, payload)
    w = a.copy()
    w[0] = 0.0
    return _compose_series(fk, w, dim, order)


def _propagate(e: ex.Expr, centers: np.ndarray, dim: int, order: int):
    """Forward jet propagation; centers has shape (dim,) + batch."""
    batch = centers.shape[1:]
    k = e.kind
    if k == "const":
        out = _zero(dim, order, batch)
        out[0] = e.payload
        return out
    if k == "var":
        i = e.payload
        if i >= dim:
            raise ex.DomainError(f"variable v{i} outside jet dimension {dim}")
        out = _zero(dim, order, batch)
        out[0] = centers[i]
        if order >= 1:
            unit = tuple(1 if j == i else 0 for j in range(dim))
            out[index_of(unit, order)] = 1.0
        return out
    if k == "add":
        out = _propagate(e.children[0], centers, dim, order)
        for c in e.children[1:]:
            out = out + _propagate(c, centers, dim, order)
        return out
    if k == "mul":
        out = _propagate(e.children[0], centers, dim, order)
        for c in e.children[1:]:
            out = _jmul(out, _propagate(c, centers, dim, order), dim, order)
        return out
    if k == "div":
        a = _propagate(e.children[0], centers, dim, order)
        b = _propagate(e.children[1], centers, dim, order)
        return _jdiv(a, b, dim, order)
    if k == "powi":
        a = _propagate(e.children[0], centers, dim, order)
        return _jpowi(a, e.payload, dim, order)
    if k == "powr":
        a = _propagate(e.children[0], centers, dim, order)
        return _compose_unary("powr", a, dim, order, payload=e.payload)
    if k in ("exp", "log", "sin", "cos", "sinh", "cosh"):
        a = _propagate(e.children[0], centers, dim, order)
        return _compose_unary(k, a, dim, order)
    if k == "norm":
        s = None
        for c in e.children:
            jc = _propagate(c, centers, dim, order)
            sq = _jmul(jc, jc, dim, order)
            s = sq if s is None else s + sq
        if np.any(np.abs(s[0]) <= ex.NORM_GUARD**2):
            raise ex.DomainError("radial node jet within 1e-8 of the origin")
        return _compose_unary("powr", s, dim, order, payload=0.5)
    raise ValueError(f"unknown node kind {k!r}")


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------


def jet_from_expr(e: ex.Expr, center, order: int) -> Jet:
    """Order-``order`` Taylor jet of ``e`` at ``center``.

    The center must lie in the domain of ``e``; singular nodes raise
    :class:`microlocal.expr.DomainError` naming the offending node.
    """
    center = np.asarray(center, dtype=complex).reshape(-1)
    dim = center.shape[0]
    coeffs = _propagate(e, center.reshape(dim, 1), dim, int(order))[:, 0]
    return Jet(dim, int(order), center, coeffs)


def jet_batch_from_expr(e: ex.Expr, centers, order: int) -> np.ndarray:
    """Jet coefficients of ``e`` at many centers.

    ``centers`` has shape (dim, B); the result has shape (n_idx, B) in the
    graded-lexicographic layout.
    """
    centers = np.asarray(centers, dtype=complex)
    if centers.ndim != 2:
        raise ValueError("centers must have shape (dim, B)")
    dim = centers.shape[0]
    return _propagate(e, centers, dim, int(order))


def jet_arith(a: Jet, b: Jet, op: str) -> Jet:
    """Pointwise jet arithmetic; op is one of ``add mul div``."""
    if a.dim != b.dim or a.order != b.order:
        raise ValueError("jet shapes differ")
    if not np.allclose(a.center, b.center, rtol=0.0, atol=0.0):
        raise ValueError("jet centers differ")
    ca = a.coeffs[:, None]
    cb = b.coeffs[:, None]
    if op == "add":
        out = ca + cb
    elif op == "mul":
        out = _jmul(ca, cb, a.dim, a.order)
    elif op == "div":
        out = _jdiv(ca, cb, a.dim, a.order)
    else:
        raise ValueError(f"unknown op {op!r}")
    return Jet(a.dim, a.order, a.center, out[:, 0])


def derivative_at(j: Jet, alpha) -> complex:
    """d^alpha f(center) = alpha! * coeff(alpha)."""
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != j.dim:
        raise ValueError("multi-index length differs from jet dimension")
    if sum(alpha) > j.order:
        raise ValueError(f"|alpha|={sum(alpha)} exceeds jet order {j.order}")
    return complex(j.coeffs[index_of(alpha, j.order)] * factorial_multi(alpha))


def gradient_norms(coeffs: np.ndarray, dim: int, order: int) -> np.ndarray:
    """Euclidean derivative norms |grad^j f| for j = 0..order.

    Uses the convention |grad^j f| = sqrt(sum_{|alpha|=j} |d^alpha f|^2).
    ``coeffs`` has shape (n_idx,) + batch; result (order+1,) + batch.
    """
    idx = multi_indices(dim, order)
    batch = coeffs.shape[1:]
    out = np.zeros((order + 1,) + batch)
    for i, alpha in enumerate(idx):
        j = sum(alpha)
        d = coeffs[i] * factorial_multi(alpha)
        out[j] += np.abs(d) ** 2
    return np.sqrt(out)
