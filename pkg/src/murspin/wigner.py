"""Wigner small-d matrix and the polynomials |d_{l,h}(theta)|^2 in x = cos(theta)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from numpy.polynomial import polynomial as P

from .spin import SpinValue, expm_sy, to_twice


def d_matrix(s, theta: float) -> np.ndarray:
    """Real matrix d_{l,h}(theta) = <l| exp(-i theta Sy) |h>, z-basis array order."""
    return expm_sy(s, theta).real


def d_small(s, l, h, theta: float) -> float:
    spin = SpinValue.of(s)
    return float(d_matrix(spin, theta)[spin.index(l), spin.index(h)])


@dataclass(frozen=True)
class DSquaredPoly:
    """|d^(s)_{l,h}|^2 as monomial coefficients in x = cos(theta), lowest degree first."""

    twice_s: int
    twice_l: int
    twice_h: int
    coeffs: tuple

    @property
    def spin(self) -> SpinValue:
        return SpinValue(self.twice_s)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, x):
        return P.polyval(x, np.asarray(self.coeffs))

    def antiderivative(self) -> np.ndarray:
        return P.polyint(np.asarray(self.coeffs))

    def integral(self, lo: float, hi: float) -> float:
        anti = self.antiderivative()
        return float(P.polyval(hi, anti) - P.polyval(lo, anti))

    def normalization(self) -> float:
        """(s + 1/2) * integral over [-1, 1]; equals 1."""
        return (self.twice_s + 1) / 2 * self.integral(-1.0, 1.0)


def chebyshev_nodes(n: int) -> np.ndarray:
    k = np.arange(n)
    return np.cos((2 * k + 1) * np.pi / (2 * n))


@lru_cache(maxsize=None)
def _poly_table(twice_s: int) -> np.ndarray:
    """Coefficients of every |d_{l,h}|^2, shape (d, d, 2s+1), by interpolation at
    2s+1 Chebyshev nodes in x."""
    spin = SpinValue(twice_s)
    deg = twice_s
    nodes = chebyshev_nodes(deg + 1)
    values = np.array([d_matrix(spin, math.acos(x)) ** 2 for x in nodes])  # (nodes, d, d)
    vander = np.vander(nodes, deg + 1, increasing=True)
    flat = values.reshape(len(nodes), -1)
    coeffs = np.linalg.solve(vander, flat)  # (deg+1, d*d)
    out = coeffs.T.reshape(spin.dim, spin.dim, deg + 1)
    out.setflags(write=False)
    return out


def poly_coefficients(s) -> np.ndarray:
    """All |d|^2 coefficient vectors for spin s, indexed [i_l, i_h, power]."""
    return _poly_table(SpinValue.of(s).twice_s)


def d_squared_poly(s, l, h) -> DSquaredPoly:
    spin = SpinValue.of(s)
    tl, th = to_twice(l), to_twice(h)
    c = _poly_table(spin.twice_s)[spin.index_twice(tl), spin.index_twice(th)]
    return DSquaredPoly(spin.twice_s, tl, th, tuple(float(v) for v in c))


def dssm_poly(s, m) -> np.ndarray:
    """Closed form of |d_{s,m}|^2 with the top index maximal:
    (2s)!/((s+m)!(s-m)!) ((1+x)/2)^(s+m) ((1-x)/2)^(s-m)."""
    spin = SpinValue.of(s)
    tm = to_twice(m)
    spin.index_twice(tm)
    up = (spin.twice_s + tm) // 2
    down = (spin.twice_s - tm) // 2
    binom = math.comb(spin.twice_s, up)
    poly = P.polypow([0.5, 0.5], up) if up else np.array([1.0])
    poly = P.polymul(poly, P.polypow([0.5, -0.5], down) if down else [1.0])
    return binom * np.asarray(poly)


def exact_d_squared_coeffs(s, l, h) -> list[Fraction]:
    """Exact rational coefficients of |d_{l,h}|^2 from the explicit factorial sum.

    d_{l,h} = sum_k c_k cos(t/2)^(2s+h-l-2k) sin(t/2)^(l-h+2k); the square root
    of the factorial prefactor cancels in every product c_k c_k', so the square
    is rational in x with cos^2(t/2) = (1+x)/2, sin^2(t/2) = (1-x)/2.
    Independent of the matrix route; used to cross-check it.
    """
    spin = SpinValue.of(s)
    ts, tl, th = spin.twice_s, to_twice(l), to_twice(h)
    jl, jh = (ts + tl) // 2, (ts + th) // 2  # s+l, s+h
    ml, mh = (ts - tl) // 2, (ts - th) // 2  # s-l, s-h
    pref = math.factorial(jl) * math.factorial(ml) * math.factorial(jh) * math.factorial(mh)
    dl = (tl - th) // 2  # l - h, integer
    terms = []
    for k in range(max(0, -dl), min(jh, ml) + 1):
        denom = (
            math.factorial(jh - k)
            * math.factorial(k)
            * math.factorial(dl + k)
            * math.factorial(ml - k)
        )
        sign = -1 if (dl + k) % 2 else 1
        cos_pow = ts - dl - 2 * k
        sin_pow = dl + 2 * k
        terms.append((sign, denom, cos_pow, sin_pow))
    total = [Fraction(0)] * (ts + 1)
    half_plus = [Fraction(1, 2), Fraction(1, 2)]
    half_minus = [Fraction(1, 2), Fraction(-1, 2)]
    for s1, d1, c1, n1 in terms:
        for s2, d2, c2, n2 in terms:
            coef = Fraction(s1 * s2 * pref, d1 * d2)
            poly = _frac_pow(half_plus, (c1 + c2) // 2)
            poly = _frac_mul(poly, _frac_pow(half_minus, (n1 + n2) // 2))
            for i, v in enumerate(poly):
                total[i] += coef * v
    return total


def _frac_mul(a, b):
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return out


def _frac_pow(a, n):
    out = [Fraction(1)]
    for _ in range(n):
        out = _frac_mul(out, a)
    return out


def check_d_identities(s, n_theta: int = 50) -> dict:
    """Maximum violations of the d-matrix identities on an n_theta grid of [0, pi].

    Keys: ``symmetry`` (d_{m',m} = (-1)^(m-m') d_{m,m'} = d_{-m,-m'}),
    ``reflection`` (|d_{l,m}(t)|^2 = |d_{-m,l}(pi - t)|^2), ``orthonormality``
    (rows and columns), ``top_row`` (closed form for l = s), ``polynomial``
    (interpolated |d|^2 vs pointwise), plus ``max``.
    """
    spin = SpinValue.of(s)
    thetas = np.linspace(0.0, math.pi, n_theta)
    twice = np.array(spin.twice_ms())
    d = spin.dim
    sign = np.array([[(-1) ** (((tm - tmp) // 2) % 2) for tm in twice] for tmp in twice])
    rev = slice(None, None, -1)
    coeffs = poly_coefficients(spin)
    top = np.array([dssm_poly(spin, tm / 2) for tm in twice])
    out = {"symmetry": 0.0, "reflection": 0.0, "orthonormality": 0.0, "top_row": 0.0, "polynomial": 0.0}
    eye = np.eye(d)
    for t in thetas:
        dm = d_matrix(spin, t)
        # dm[i', i] = d_{m', m}; sign[i', i] = (-1)^(m - m')
        out["symmetry"] = max(
            out["symmetry"],
            np.abs(dm - sign * dm.T).max(),
            np.abs(dm - dm.T[rev, rev]).max(),
        )
        sq = dm**2
        sq_reflected = d_matrix(spin, math.pi - t) ** 2
        # |d_{l,m}(t)|^2 vs |d_{-m,l}(pi-t)|^2: element [i_l, i_m] vs [d-1-i_m, i_l]
        out["reflection"] = max(out["reflection"], np.abs(sq - sq_reflected[rev, :].T).max())
        out["orthonormality"] = max(
            out["orthonormality"], np.abs(dm @ dm.T - eye).max(), np.abs(dm.T @ dm - eye).max()
        )
        x = math.cos(t)
        poly_vals = P.polyval(x, np.moveaxis(coeffs, -1, 0))
        out["polynomial"] = max(out["polynomial"], np.abs(poly_vals - sq).max())
        top_vals = np.array([P.polyval(x, c) for c in top])
        out["top_row"] = max(out["top_row"], np.abs(top_vals - sq[0]).max())
    out = {k: float(v) for k, v in out.items()}
    out["max"] = max(out.values())
    return out
