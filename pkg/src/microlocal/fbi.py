"""FBI transform kernel, transform quadrature, and wavefront decay probes.

The phase is the ball extension

    phi(x, omega, y) = (x - y) . omega + i (|x - y|^2 + 1 - |omega|^2) / 2,

which coincides with the classical FBI phase on |omega| = 1 and keeps
Im phi >= (1 - |omega|^2)/2 > 0 inside the ball, where the closed-form
kernel

    T(x, omega, y) = Gamma((n+5)/4) (-i phi)^{-(n+5)/4}

is smooth (principal branch; Im phi >= 0 keeps -i phi in the closed right
half plane, so no cut is crossed).

On the sphere |omega| = 1 the kernel is |x-y|^{-(n+5)/4}-singular at y = x,
which is *not* locally integrable: pointwise kernel quadrature inside the
support of u is a regularized diagnostic whose value carries the documented
grading floor ``h_min`` (the t-integral and y-integral cannot be exchanged
there).  Decay-envelope fits over x are insensitive to that scale, and the
wavefront probes below use the finite-t fiber integral

    F(t) = int e^{i t phi(x, omega, y)} u(y) dy,

which is well defined for every t; analytic wavefront classification reads
off whether |F(t)| decays exponentially (regular direction) or polynomially
(singular direction) over a t-window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "fbi_phase",
    "fbi_kernel",
    "fbi_kernel_t_quadrature",
    "PiecewiseFunction",
    "builtin_function",
    "fbi_transform",
    "fiber_integral",
    "wavefront_probe",
    "DecayFit",
]


def fbi_phase(n: int, x, omega, y) -> np.ndarray:
    """Ball-extended FBI phase; broadcasts over trailing axes of y."""
    x = np.asarray(x, dtype=float).reshape(n, *([1] * (np.ndim(y) - 1)))
    omega = np.asarray(omega, dtype=float).reshape(n, *([1] * (np.ndim(y) - 1)))
    y = np.asarray(y, dtype=float)
    if y.ndim == 1 and n == 1:
        y = y.reshape(1, -1)
    d = x - y
    d2 = (d**2).sum(axis=0)
    om2 = (omega**2).sum(axis=0)
    return (d * omega).sum(axis=0) + 0.5j * (d2 + 1.0 - om2)


def fbi_kernel(n: int, x, omega, y) -> np.ndarray:
    """Closed-form kernel Gamma((n+5)/4) (-i phi)^{-(n+5)/4}.

    Refuses evaluation where |phi| vanishes (y = x on the sphere).
    Translation invariant: depends on x - y only.
    """
    phi = fbi_phase(n, x, omega, y)
    base = -1j * phi
    if np.any(np.abs(base) < 1e-12):
        raise ValueError("kernel singular: phase vanishes (y = x with |omega| = 1)")
    s = (n + 5) / 4.0
    return math.gamma(s) * base ** (-s)


def fbi_kernel_t_quadrature(n: int, x, omega, y, T: float | None = None,
                            nodes_per_period: int = 10) -> complex:
    """Oracle: truncated t-integral int_0^T e^{i t phi} t^{(n+1)/4} dt."""
    phi = complex(np.asarray(fbi_phase(n, x, omega, y)).reshape(-1)[0])
    if phi.imag <= 0:
        raise ValueError("need Im phi > 0 for the truncated oracle")
    if T is None:
        T = 40.0 / phi.imag
    total_phase = abs(phi.real) * T + phi.imag * T
    n_panels = max(40, int(total_phase / (2.0 * math.pi) * nodes_per_period / 12.0))
    nodes, weights = np.polynomial.legendre.leggauss(12)
    # dyadic grading toward t = 0 resolves the fractional power t^{(n+1)/4}
    graded = T * 2.0 ** (-np.arange(44, dtype=float))
    edges = np.unique(np.concatenate([[0.0], graded, np.linspace(0.0, T, n_panels + 1)]))
    acc = 0.0 + 0.0j
    for i in range(len(edges) - 1):
        mid = 0.5 * (edges[i] + edges[i + 1])
        half = 0.5 * (edges[i + 1] - edges[i])
        t = mid + half * nodes
        acc += np.sum(np.exp(1j * t * phi) * t ** ((n + 1) / 4.0) * weights) * half
    return complex(acc)


# ---------------------------------------------------------------------------
# test functions: compactly supported, piecewise smooth
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PiecewiseFunction:
    """1D function given by smooth pieces [(a, b, callable), ...].

    Piece boundaries are the only admissible non-smooth points, so composite
    Gauss quadrature per piece converges spectrally.
    """

    pieces: tuple

    @property
    def support(self) -> tuple:
        return (min(p[0] for p in self.pieces), max(p[1] for p in self.pieces))

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        out = np.zeros_like(y)
        for a, b, f in self.pieces:
            m = (y >= a) & (y <= b)
            if np.any(m):
                out[m] = f(y[m])
        return out

    @classmethod
    def from_samples(cls, y, values) -> "PiecewiseFunction":
        """Single piece interpolating sampled data linearly on its span."""
        y = np.asarray(y, dtype=float)
        values = np.asarray(values, dtype=float)
        if y.ndim != 1 or y.shape != values.shape or y.size < 2:
            raise ValueError("need matching 1D sample arrays with >= 2 points")
        if not np.all(np.diff(y) > 0):
            raise ValueError("sample positions must be strictly increasing")

        def interp(t):
            return np.interp(t, y, values, left=0.0, right=0.0)

        return cls(((float(y[0]), float(y[-1]), interp),))


def _bump(y):
    out = np.zeros_like(y)
    m = np.abs(y) < 1.0
    out[m] = np.exp(-1.0 / (1.0 - y[m] ** 2))
    return out


def builtin_function(name: str) -> PiecewiseFunction:
    """Named test data: heaviside, abs, bump, gaussian."""
    if name == "heaviside":
        return PiecewiseFunction(((-1.0, 0.0, _bump),))
    if name == "abs":
        return PiecewiseFunction(((-1.0, 0.0, lambda y: -y * _bump(y)),
                                  (0.0, 1.0, lambda y: y * _bump(y))))
    if name == "bump":
        return PiecewiseFunction(((-1.0, 1.0, _bump),))
    if name == "gaussian":
        return PiecewiseFunction(((-6.0, 6.0, lambda y: np.exp(-y**2 / 2.0)),))
    raise ValueError(f"unknown builtin {name!r}")


def _piece_panels(a: float, b: float, x_split: float | None, h_min: float,
                  per_unit: float):
    """Panel edges for one piece, graded toward the split point if inside."""
    edges = [a]
    if x_split is not None and a + h_min < x_split < b - h_min:
        left = []
        e = x_split - h_min
        while e > a + h_min:
            left.append(e)
            e = x_split - (x_split - e) * 2.0
        edges += sorted(left)
        edges.append(x_split)
        right = []
        e = x_split + h_min
        while e < b - h_min:
            right.append(e)
            e = x_split + (e - x_split) * 2.0
        edges += right
    n_extra = max(2, int((b - a) * per_unit))
    base = np.linspace(a, b, n_extra + 1)
    all_edges = np.unique(np.concatenate([np.array(edges), base, [b]]))
    return all_edges


def fbi_transform(u: PiecewiseFunction, points, n: int = 1,
                  h_min: float = 1e-3, per_unit: float = 6.0,
                  order: int = 12) -> np.ndarray:
    """Tu(x, omega) = int T(x, omega, y) u(y) dy over the support of u.

    ``points`` is a list of (x, omega) scalars/1-vectors (n = 1).  Panels
    are graded toward y = x with floor ``h_min``; Gauss nodes never hit the
    singular point.  For |omega| = 1 and x inside the support the value is
    the documented h_min-regularization of the non-integrable kernel.
    """
    if n != 1:
        raise ValueError("transform quadrature implemented in 1D")
    nodes, weights = np.polynomial.legendre.leggauss(order)
    out = np.zeros(len(points), dtype=complex)
    for ip, (x, omega) in enumerate(points):
        xv = float(np.asarray(x).reshape(-1)[0])
        acc = 0.0 + 0.0j
        for a, b, f in u.pieces:
            edges = _piece_panels(a, b, xv, h_min, per_unit)
            for i in range(len(edges) - 1):
                mid = 0.5 * (edges[i] + edges[i + 1])
                half = 0.5 * (edges[i + 1] - edges[i])
                y = mid + half * nodes
                k = fbi_kernel(1, [xv], [omega], y.reshape(1, -1))
                acc += np.sum(k * f(y) * weights) * half
        out[ip] = acc
    return out


def fiber_integral(u: PiecewiseFunction, x, omega, t_grid,
                   order: int = 12) -> np.ndarray:
    """F(t) = int e^{i t phi(x, omega, y)} u(y) dy on a t-grid (1D)."""
    t_grid = np.asarray(t_grid, dtype=float)
    xv = float(np.asarray(x).reshape(-1)[0])
    om = float(np.asarray(omega).reshape(-1)[0])
    nodes, weights = np.polynomial.legendre.leggauss(order)
    t_max = float(np.max(t_grid))
    out = np.zeros(t_grid.shape, dtype=complex)
    for a, b, f in u.pieces:
        span = b - a
        n_panels = max(4, int(span * t_max / (2.0 * math.pi) * 1.5) + 4)
        edges = np.linspace(a, b, n_panels + 1)
        for i in range(n_panels):
            mid = 0.5 * (edges[i] + edges[i + 1])
            half = 0.5 * (edges[i + 1] - edges[i])
            y = mid + half * nodes
            phi = (xv - y) * om + 0.5j * (xv - y) ** 2
            vals = f(y) * weights
            out += half * (np.exp(1j * np.multiply.outer(t_grid, phi)) @ vals)
    return out


@dataclass
class DecayFit:
    """Large-t decay classification of a fiber integral."""

    t: np.ndarray
    mags: np.ndarray
    model: str            # "exponential" | "polynomial" | "inconclusive"
    rate: float           # c in |F| ~ e^{-c t}
    power: float          # p in |F| ~ t^{-p}
    resid_exp: float
    resid_poly: float
    win_factor: float

    def to_dict(self) -> dict:
        return {"model": self.model, "rate": self.rate, "power": self.power,
                "resid_exp": self.resid_exp, "resid_poly": self.resid_poly,
                "t_min": float(self.t[0]), "t_max": float(self.t[-1])}


def wavefront_probe(u: PiecewiseFunction, x, omega, t_range=(10.0, 80.0),
                    samples: int = 50, win_factor: float = 2.0,
                    n_blocks: int = 10, floor_rel: float = 1e-13) -> DecayFit:
    """Classify the direction (x, omega) by the decay of |F(t)|.

    Both models log|F| = A - c t and log|F| = A - p log t are fitted to the
    block-maximum envelope of |F| over ``n_blocks`` geometric blocks of the
    t-grid; interference between several singular contributions produces
    destructive dips below the envelope that would otherwise swamp the model
    comparison.  Samples below ``floor_rel`` times the peak are discarded as
    quadrature noise.  The model whose RMS log residual is smaller by
    ``win_factor`` wins; anything else is reported inconclusive.
    """
    t0, t1 = t_range
    if t0 < 5.0:
        raise ValueError("probe needs t_min >= 5")
    t = np.geomspace(t0, t1, samples)
    F = fiber_integral(u, x, omega, t)
    mags = np.abs(F)
    scale = max(float(mags.max()), 1e-300)
    tb, mb = [], []
    for b in range(n_blocks):
        lo, hi = b * samples // n_blocks, (b + 1) * samples // n_blocks
        i = lo + int(np.argmax(mags[lo:hi]))
        tb.append(t[i])
        mb.append(mags[i])
    tb = np.array(tb)
    mb = np.array(mb)
    keep = mb > floor_rel * scale
    tb, mb = tb[keep], mb[keep]
    if tb.size < 4:
        return DecayFit(t, mags, "inconclusive", 0.0, 0.0, math.inf, math.inf,
                        win_factor)
    logm = np.log(mb)

    def lsq(design):
        sol, *_ = np.linalg.lstsq(design, logm, rcond=None)
        r = logm - design @ sol
        return sol, float(np.sqrt(np.mean(r**2)))

    sol_e, res_e = lsq(np.stack([np.ones_like(tb), -tb], axis=1))
    sol_p, res_p = lsq(np.stack([np.ones_like(tb), -np.log(tb)], axis=1))
    rate = float(sol_e[1])
    power = float(sol_p[1])
    if res_e * win_factor <= res_p:
        model = "exponential"
    elif res_p * win_factor <= res_e:
        model = "polynomial"
    else:
        model = "inconclusive"
    return DecayFit(t, mags, model, rate, power, res_e, res_p, win_factor)
