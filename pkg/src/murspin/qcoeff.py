"""Discretization grids, q-coefficient tables and the approximate spin components."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from numpy.polynomial import polynomial as P

from .spin import (
    SpinValue,
    check_state,
    eigen_projections,
    format_half,
    to_twice,
)
from .wigner import poly_coefficients

GRID_MIN_GAP = 1e-6


@dataclass(frozen=True)
class AngleGrid:
    """Cosines c_0 = 1 > c_1 > ... > c_{2s+1} = -1 with c_{2s+1-k} = -c_k."""

    twice_s: int
    cosines: tuple

    def __post_init__(self):
        c = tuple(float(v) for v in self.cosines)
        object.__setattr__(self, "cosines", c)
        n = self.twice_s + 2
        if len(c) != n:
            raise ValueError(f"expected {n} cosines, got {len(c)}")
        if c[0] != 1.0 or c[-1] != -1.0:
            raise ValueError("grid must start at cos = 1 and end at cos = -1")
        for k in range(n - 1):
            if not c[k] > c[k + 1]:
                raise ValueError("grid cosines must be strictly decreasing")
        for k in range(n):
            if abs(c[n - 1 - k] + c[k]) > 1e-12:
                raise ValueError("grid is not symmetric about pi/2")

    @classmethod
    def from_free(cls, s, free) -> "AngleGrid":
        """Build from the floor(s) interior cosines above the midpoint (descending)."""
        spin = SpinValue.of(s)
        free = [float(v) for v in np.atleast_1d(np.asarray(free, dtype=float))]
        if len(free) != spin.n_free_angles:
            raise ValueError(f"s = {spin} needs {spin.n_free_angles} free cosines, got {len(free)}")
        upper = [1.0] + free
        middle = [0.0] if spin.twice_s % 2 else []
        return cls(spin.twice_s, tuple(upper + middle + [-v for v in reversed(upper)]))

    @classmethod
    def from_a(cls, s, a: float) -> "AngleGrid":
        """Single-parameter grid a = cos(theta_1) for s = 1 and s = 3/2."""
        spin = SpinValue.of(s)
        if spin.n_free_angles != 1:
            raise ValueError("the a-parametrization exists only for s = 1 and s = 3/2")
        return cls.from_free(spin, [a])

    @property
    def spin(self) -> SpinValue:
        return SpinValue(self.twice_s)

    @property
    def free(self) -> tuple:
        return self.cosines[1 : 1 + self.twice_s // 2]

    @property
    def angles(self) -> np.ndarray:
        return np.arccos(np.clip(self.cosines, -1.0, 1.0))

    def min_gap(self) -> float:
        return float(-np.diff(self.cosines).max())

    def to_list(self) -> list:
        return list(self.cosines)


def unbiased_grid(s) -> AngleGrid:
    """Equal-width cells in cos(theta): c_k = (2s+1-2k)/(2s+1)."""
    spin = SpinValue.of(s)
    d = spin.dim
    cos = [(d - 2 * k) / d for k in range(d + 1)]
    cos[0], cos[-1] = 1.0, -1.0
    return AngleGrid(spin.twice_s, tuple(cos))


@dataclass(frozen=True)
class LambdaWeights:
    """Mixture weights lambda_l on the simplex, array order l = s, ..., -s."""

    twice_s: int
    weights: tuple

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (self.twice_s + 1,):
            raise ValueError(f"expected {self.twice_s + 1} weights")
        if (w < -1e-12).any() or abs(w.sum() - 1.0) > 1e-10:
            raise ValueError("weights must be nonnegative and sum to 1")
        w = np.clip(w, 0.0, None)
        w = w / w.sum()
        object.__setattr__(self, "weights", tuple(float(v) for v in w))

    @classmethod
    def delta(cls, s, l) -> "LambdaWeights":
        spin = SpinValue.of(s)
        w = np.zeros(spin.dim)
        w[spin.index(l)] = 1.0
        return cls(spin.twice_s, tuple(w))

    @classmethod
    def uniform(cls, s) -> "LambdaWeights":
        spin = SpinValue.of(s)
        return cls(spin.twice_s, tuple(np.full(spin.dim, 1.0 / spin.dim)))

    def array(self) -> np.ndarray:
        return np.asarray(self.weights)

    def __getitem__(self, l) -> float:
        return self.weights[SpinValue(self.twice_s).index(l)]


def _as_lambdas(s, lambdas) -> LambdaWeights:
    spin = SpinValue.of(s)
    if isinstance(lambdas, LambdaWeights):
        if lambdas.twice_s != spin.twice_s:
            raise ValueError("weights belong to a different spin")
        return lambdas
    return LambdaWeights(spin.twice_s, tuple(lambdas))


def _as_grid(s, grid) -> AngleGrid:
    spin = SpinValue.of(s)
    if grid is None or (isinstance(grid, str) and grid == "unbiased"):
        return unbiased_grid(spin)
    if not isinstance(grid, AngleGrid):
        grid = AngleGrid(spin.twice_s, tuple(grid))
    if grid.twice_s != spin.twice_s:
        raise ValueError("grid belongs to a different spin")
    return grid


def q_array(s, cosines) -> np.ndarray:
    """Raw q[i_m, i_l, i_h] for a cosine vector (no validation)."""
    spin = SpinValue.of(s)
    anti = P.polyint(np.moveaxis(poly_coefficients(spin), -1, 0))  # (deg+2, d, d)
    vals = P.polyval(np.asarray(cosines, dtype=float), anti)  # (d, d, npts)
    diffs = vals[:, :, :-1] - vals[:, :, 1:]  # (d_l, d_h, d_m)
    return (spin.twice_s + 1) / 2 * np.moveaxis(diffs, -1, 0)


def q_diagonal(s, cosines) -> np.ndarray:
    """Q[i_m, i_l] = q(m | l, m), the only slice the loss and the max-min need."""
    spin = SpinValue.of(s)
    coeffs = poly_coefficients(spin)  # [i_l, i_h, power]
    d = spin.dim
    c = np.asarray(cosines, dtype=float)
    out = np.empty((d, d))
    for i in range(d):
        anti = P.polyint(coeffs[:, i, :].T)  # (deg+2, d_l)
        out[i] = (P.polyval(c[i], anti) - P.polyval(c[i + 1], anti)) * (spin.twice_s + 1) / 2
    return out


@dataclass(frozen=True)
class QTable:
    """q(m | l, h): probability of outcome m from component l on the z-eigenstate h."""

    twice_s: int
    grid: AngleGrid
    q: np.ndarray  # [i_m, i_l, i_h]

    @property
    def spin(self) -> SpinValue:
        return SpinValue(self.twice_s)

    def __call__(self, m, l, h) -> float:
        spin = self.spin
        return float(self.q[spin.index(m), spin.index(l), spin.index(h)])

    def diagonal(self) -> np.ndarray:
        """Q[i_m, i_l] = q(m | l, m)."""
        idx = np.arange(self.spin.dim)
        return self.q[idx, :, idx]

    def mixture(self, lambdas) -> np.ndarray:
        """Transition matrix T[i_m, i_h] = sum_l lambda_l q(m | l, h)."""
        lam = _as_lambdas(self.spin, lambdas).array()
        return np.einsum("mlh,l->mh", self.q, lam)

    def residuals(self) -> dict:
        """Violations of positivity, normalization, symmetries and the sum rule."""
        q = self.q
        rev = slice(None, None, -1)
        c = np.asarray(self.grid.cosines)
        half = (self.twice_s + 1) / 2
        rule = half * (c[:-1] - c[1:])
        return {
            "min_q": float(q.min()),
            "normalization": float(np.abs(q.sum(axis=0) - 1).max()),
            "swap_lh": float(np.abs(q - q.transpose(0, 2, 1)).max()),
            "flip_lh": float(np.abs(q - q[:, rev, rev]).max()),
            "flip_mh": float(np.abs(q - q[rev, :, rev]).max()),
            "sum_rule_l": float(np.abs(q.sum(axis=1) - rule[:, None]).max()),
            "sum_rule_h": float(np.abs(q.sum(axis=2) - rule[:, None]).max()),
        }

    def rows(self):
        """(m, l, h, q) tuples with half-integer labels as strings."""
        tw = self.spin.twice_ms()
        for i, tm in enumerate(tw):
            for j, tl in enumerate(tw):
                for k, th in enumerate(tw):
                    yield format_half(tm), format_half(tl), format_half(th), float(self.q[i, j, k])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["m", "l", "h", "q"])
        for m, l, h, v in self.rows():
            w.writerow([m, l, h, f"{v:.17g}"])
        return buf.getvalue()

    def to_dict(self) -> dict:
        nested: dict = {}
        for m, l, h, v in self.rows():
            nested.setdefault(m, {}).setdefault(l, {})[h] = v
        return {"s": format_half(self.twice_s), "cosines": list(self.grid.cosines), "q": nested}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, data: dict) -> "QTable":
        spin = SpinValue.of(data["s"])
        grid = AngleGrid(spin.twice_s, tuple(data["cosines"]))
        d = spin.dim
        q = np.empty((d, d, d))
        for m, by_l in data["q"].items():
            for l, by_h in by_l.items():
                for h, v in by_h.items():
                    q[spin.index(m), spin.index(l), spin.index(h)] = v
        return cls(spin.twice_s, grid, q)

    @classmethod
    def from_json(cls, text: str) -> "QTable":
        return cls.from_dict(json.loads(text))


def q_table(s, grid=None) -> QTable:
    """q(m|l,h) = (s + 1/2) * integral of |d_{l,h}|^2 dx over the cell of m.

    The cell of m is [c_{s-m+1}, c_{s-m}] in x = cos(theta); integration is
    exact through the polynomial antiderivative.
    """
    spin = SpinValue.of(s)
    grid = _as_grid(spin, grid)
    q = q_array(spin, grid.cosines)
    q.setflags(write=False)
    return QTable(spin.twice_s, grid, q)


# Closed forms for s <= 3/2, written straight from the small-spin tables and
# kept apart from q_table on purpose.


def _closed_half(tm, tl, th, a):
    return 0.5 + 2 * (tl / 2) * (th / 2) * (tm / 2)


def _closed_one(tm, tl, th, a):
    # canonical entries, completed by symmetry in _complete
    big = 1 - (1 + a) ** 3 / 8
    small = (1 - a) ** 3 / 8
    side = (2 + a) / 4 * (1 - a) ** 2
    table = {
        (2, 2, 2): big,
        (2, 2, -2): small,
        (2, 0, 2): side,
        (2, 0, -2): side,
        (2, 0, 0): (1 - a**3) / 2,
        (0, 0, 2): a / 2 * (3 - a**2),
        (0, 0, 0): a**3,
        (0, 2, 2): a / 4 * (3 + a**2),
        (0, 2, -2): a / 4 * (3 + a**2),
    }
    return _complete(table, tm, tl, th)


def _closed_three_halves(tm, tl, th, a):
    table = {
        (3, 3, 3): (15 - 4 * a - 6 * a**2 - 4 * a**3 - a**4) / 16,
        (3, 3, -3): (1 - 4 * a + 6 * a**2 - 4 * a**3 + a**4) / 16,
        (3, 3, 1): (11 - 12 * a - 6 * a**2 + 4 * a**3 + 3 * a**4) / 16,
        (3, 3, -1): (5 - 12 * a + 6 * a**2 + 4 * a**3 - 3 * a**4) / 16,
        (3, 1, 1): (7 - 4 * a + 10 * a**2 - 4 * a**3 - 9 * a**4) / 16,
        (3, 1, -1): (9 - 4 * a - 10 * a**2 - 4 * a**3 + 9 * a**4) / 16,
        (1, 3, 3): a / 16 * (4 + 6 * a + 4 * a**2 + a**3),
        (1, 3, -3): a / 16 * (4 - 6 * a + 4 * a**2 - a**3),
        (1, 3, 1): a / 16 * (12 + 6 * a - 4 * a**2 - 3 * a**3),
        (1, 3, -1): a / 16 * (12 - 6 * a - 4 * a**2 + 3 * a**3),
        (1, 1, 1): a / 16 * (4 - 10 * a + 4 * a**2 + 9 * a**3),
        (1, 1, -1): a / 16 * (4 + 10 * a + 4 * a**2 - 9 * a**3),
    }
    return _complete(table, tm, tl, th)


def _complete(table, tm, tl, th):
    """Look up (m, l, h) through q(m|l,h) = q(m|h,l) = q(m|-l,-h) = q(-m|l,-h)."""
    seen = set()
    todo = [(tm, tl, th)]
    while todo:
        key = todo.pop()
        if key in seen:
            continue
        if key in table:
            return table[key]
        seen.add(key)
        m, l, h = key
        todo.extend([(m, h, l), (m, -l, -h), (-m, l, -h)])
    raise KeyError((tm, tl, th))


def q_closed_form(s, a, m, l, h) -> float:
    """Tabulated q-coefficients for s in {1/2, 1, 3/2}; ``a`` = cos(theta_1) (ignored for s = 1/2)."""
    spin = SpinValue.of(s)
    tm, tl, th = to_twice(m), to_twice(l), to_twice(h)
    for t in (tm, tl, th):
        spin.index_twice(t)
    if spin.twice_s == 1:
        return _closed_half(tm, tl, th, a)
    if spin.twice_s == 2:
        return _closed_one(tm, tl, th, float(a))
    if spin.twice_s == 3:
        return _closed_three_halves(tm, tl, th, float(a))
    raise ValueError(f"no closed form for s = {spin}; only s <= 3/2")


def marginal_povm(s, lambdas, grid, n) -> np.ndarray:
    """M(m) = sum_{l,h} q(m|l,h) lambda_l A_n(h), stacked in array order of m."""
    spin = SpinValue.of(s)
    table = q_table(spin, grid)
    trans = table.mixture(lambdas)  # [i_m, i_h]
    proj = eigen_projections(spin, n)  # [i_h, d, d]
    return np.einsum("mh,hij->mij", trans, proj)


def target_distribution(s, n, state) -> np.ndarray:
    """A_n^rho(h) = Tr(rho A_n(h)), array order."""
    spin = SpinValue.of(s)
    check_state(state)
    proj = eigen_projections(spin, n)
    p = np.real(np.einsum("ij,hji->h", np.asarray(state), proj))
    return np.clip(p, 0.0, None)


def marginal_distribution(s, lambdas, grid, n, state) -> np.ndarray:
    """M^rho(m) = sum_{l,h} q(m|l,h) lambda_l A_n^rho(h)."""
    spin = SpinValue.of(s)
    trans = q_table(spin, grid).mixture(lambdas)
    return trans @ target_distribution(spin, n, state)


def parse_fraction_list(text: str) -> list[float]:
    return [float(Fraction(t)) for t in text.replace(";", ",").split(",") if t.strip()]


def grid_a(grid: AngleGrid) -> float:
    if grid.twice_s // 2 != 1:
        raise ValueError("a is defined only for s = 1, 3/2")
    return grid.cosines[1]


__all__ = [
    "AngleGrid",
    "LambdaWeights",
    "QTable",
    "GRID_MIN_GAP",
    "unbiased_grid",
    "q_table",
    "q_array",
    "q_diagonal",
    "q_closed_form",
    "marginal_povm",
    "marginal_distribution",
    "target_distribution",
]

