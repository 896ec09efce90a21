"""Spin-s bookkeeping and dense spin matrices.

Half-integers are stored doubled (``twice_s``, ``twice_m``) so that every
index is an exact integer.  Array rows/columns follow the z-basis ordering
m = s, s-1, ..., -s, i.e. index ``i = s - m``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

# structural identities, unitarity, state validation
TOL_STRUCT = 1e-10
TOL_UNITARY = 1e-12
TOL_STATE = 1e-10


def to_twice(value) -> int:
    """Return ``2*value`` as an int, rejecting anything that is not a half-integer.

    Accepts ints, floats, Fractions and strings such as ``"3/2"`` or ``"1.5"``.
    """
    if isinstance(value, str):
        text = value.strip()
        try:
            frac = Fraction(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not a half-integer: {value!r}") from exc
    elif isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"not a half-integer: {value!r}")
        frac = Fraction(value).limit_denominator(1000)
        if abs(float(frac) - value) > 1e-9:
            raise ValueError(f"not a half-integer: {value!r}")
    else:
        frac = Fraction(value)
    doubled = 2 * frac
    if doubled.denominator != 1:
        raise ValueError(f"not a half-integer: {value!r}")
    return int(doubled)


def format_half(twice: int) -> str:
    """``3 -> '3/2'``, ``2 -> '1'``, ``-1 -> '-1/2'``."""
    if twice % 2 == 0:
        return str(twice // 2)
    return f"{twice}/2"


@dataclass(frozen=True, order=True)
class SpinValue:
    """Spin quantum number s, stored as ``twice_s = 2s >= 1``."""

    twice_s: int

    def __post_init__(self):
        if not isinstance(self.twice_s, (int, np.integer)) or self.twice_s < 1:
            raise ValueError(f"twice_s must be a positive integer, got {self.twice_s!r}")
        object.__setattr__(self, "twice_s", int(self.twice_s))

    @classmethod
    def of(cls, value) -> "SpinValue":
        if isinstance(value, SpinValue):
            return value
        return cls(to_twice(value))

    @property
    def s(self) -> float:
        return self.twice_s / 2

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.twice_s, 2)

    def dimension(self) -> int:
        return self.twice_s + 1

    @property
    def dim(self) -> int:
        return self.twice_s + 1

    @property
    def n_free_angles(self) -> int:
        """Number of free discretization cosines, floor(s)."""
        return self.twice_s // 2

    def twice_ms(self) -> list[int]:
        """Doubled magnetic numbers in array order: 2s, 2s-2, ..., -2s."""
        return list(range(self.twice_s, -self.twice_s - 1, -2))

    def ms(self) -> np.ndarray:
        return np.array(self.twice_ms(), dtype=float) / 2

    def index(self, m) -> int:
        """Array index of magnetic number m (value, not doubled)."""
        return self.index_twice(to_twice(m))

    def index_twice(self, twice_m: int) -> int:
        MagneticIndex(twice_m).check(self)
        return (self.twice_s - twice_m) // 2

    def __str__(self) -> str:
        return format_half(self.twice_s)


@dataclass(frozen=True)
class MagneticIndex:
    """Magnetic number m stored as ``twice_m``."""

    twice_m: int

    @classmethod
    def of(cls, value) -> "MagneticIndex":
        if isinstance(value, MagneticIndex):
            return value
        return cls(to_twice(value))

    @property
    def m(self) -> float:
        return self.twice_m / 2

    def check(self, spin: SpinValue) -> "MagneticIndex":
        if abs(self.twice_m) > spin.twice_s or (spin.twice_s - self.twice_m) % 2:
            raise ValueError(f"m = {format_half(self.twice_m)} is not in X for s = {spin}")
        return self

    def __str__(self) -> str:
        return format_half(self.twice_m)


@dataclass(frozen=True)
class SpinMatrices:
    sx: np.ndarray
    sy: np.ndarray
    sz: np.ndarray

    def as_tuple(self):
        return (self.sx, self.sy, self.sz)

    def along(self, n) -> np.ndarray:
        """n . S"""
        n = np.asarray(n, dtype=float)
        return n[0] * self.sx + n[1] * self.sy + n[2] * self.sz


@lru_cache(maxsize=None)
def _spin_matrices(twice_s: int) -> SpinMatrices:
    s = twice_s / 2
    m = np.arange(twice_s, -twice_s - 1, -2) / 2
    # <m+1|S+|m> sits at (i-1, i) for the column of m
    plus_entries = np.sqrt(s * (s + 1) - m[1:] * (m[1:] + 1))
    splus = np.diag(plus_entries, k=1).astype(complex)
    sminus = splus.conj().T
    sx = (splus + sminus) / 2
    sy = (splus - sminus) / 2j
    sz = np.diag(m).astype(complex)
    for mat in (sx, sy, sz):
        mat.setflags(write=False)
    return SpinMatrices(sx, sy, sz)


def spin_matrices(s) -> SpinMatrices:
    """Standard z-basis spin matrices (hbar = 1) built from the ladder operators."""
    return _spin_matrices(SpinValue.of(s).twice_s)


@lru_cache(maxsize=None)
def _sy_eigensystem(twice_s: int):
    w, v = np.linalg.eigh(_spin_matrices(twice_s).sy)
    return w, v


def expm_sy(s, theta: float) -> np.ndarray:
    """exp(-i theta S_y) by eigendecomposition of the Hermitian generator."""
    w, v = _sy_eigensystem(SpinValue.of(s).twice_s)
    return (v * np.exp(-1j * theta * w)) @ v.conj().T


def _phase_z(spin: SpinValue, angle: float) -> np.ndarray:
    return np.exp(-1j * angle * spin.ms())


def rotation_v(s, theta: float, phi: float) -> np.ndarray:
    """V(theta, phi) = exp(-i phi Sz) exp(-i theta Sy) exp(i phi Sz).

    Rotates the k axis onto n(theta, phi).
    """
    spin = SpinValue.of(s)
    left = _phase_z(spin, phi)
    mid = expm_sy(spin, theta)
    # diag(left) @ mid @ diag(conj(left))
    return left[:, None] * mid * left.conj()[None, :]


def rotation_u(s, axis, angle: float) -> np.ndarray:
    """U(R_u(angle)) = exp(-i angle u.S) for a unit axis u."""
    axis = _unit(axis)
    gen = spin_matrices(s).along(axis)
    w, v = np.linalg.eigh(gen)
    return (v * np.exp(-1j * angle * w)) @ v.conj().T


def rotation_matrix(axis, angle: float) -> np.ndarray:
    """Counterclockwise SO(3) rotation of ``angle`` about ``axis`` (Rodrigues)."""
    u = _unit(axis)
    k = np.array([[0.0, -u[2], u[1]], [u[2], 0.0, -u[0]], [-u[1], u[0], 0.0]])
    return np.eye(3) + math.sin(angle) * k + (1 - math.cos(angle)) * (k @ k)


def direction(theta: float, phi: float) -> np.ndarray:
    """Unit vector n(theta, phi) from polar angles."""
    return np.array(
        [math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)]
    )


def polar_angles(n) -> tuple[float, float]:
    n = _unit(n)
    # atan2 keeps small polar angles that acos(n_z) would round to zero
    theta = math.atan2(math.hypot(n[0], n[1]), n[2])
    phi = math.atan2(n[1], n[0]) % (2 * math.pi)
    return theta, phi


def _unit(n, tol: float = TOL_STRUCT) -> np.ndarray:
    n = np.asarray(n, dtype=float).reshape(3)
    norm = float(np.linalg.norm(n))
    if abs(norm - 1.0) > tol:
        raise ValueError(f"direction must be a unit vector, |n| = {norm!r}")
    return n / norm


def z_projection(s, m) -> np.ndarray:
    """Z(m), the z-basis projector onto |m>."""
    spin = SpinValue.of(s)
    p = np.zeros((spin.dim, spin.dim), dtype=complex)
    i = spin.index(m)
    p[i, i] = 1.0
    return p


def eigen_projection(s, n, m) -> np.ndarray:
    """A_n(m), eigen-projection of n.S for eigenvalue m.

    Built as V Z(m) V^dagger from the polar angles of n; n = +-k take the
    exact diagonal path.
    """
    spin = SpinValue.of(s)
    n = _unit(n)
    twice_m = to_twice(m)
    spin.index_twice(twice_m)
    if n[0] == 0.0 and n[1] == 0.0:
        return z_projection(spin, Fraction(twice_m if n[2] > 0 else -twice_m, 2))
    theta, phi = polar_angles(n)
    v = rotation_v(spin, theta, phi)
    col = v[:, spin.index_twice(twice_m)]
    return np.outer(col, col.conj())


def eigen_projections(s, n) -> np.ndarray:
    """Stack of A_n(m) for all m in array order, shape (2s+1, d, d)."""
    spin = SpinValue.of(s)
    return np.array([eigen_projection(spin, n, Fraction(tm, 2)) for tm in spin.twice_ms()])


def maximally_mixed(s) -> np.ndarray:
    d = SpinValue.of(s).dim
    return np.eye(d, dtype=complex) / d


@dataclass(frozen=True)
class BlochState:
    """Spin-1/2 state rho = (1 + 2 r.S)/2 with |r| <= 1."""

    r: tuple

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float).reshape(3)
        if np.linalg.norm(r) > 1 + TOL_STATE:
            raise ValueError(f"Bloch vector too long: |r| = {np.linalg.norm(r)}")
        object.__setattr__(self, "r", tuple(float(x) for x in r))

    def density_matrix(self) -> np.ndarray:
        sm = spin_matrices(SpinValue(1))
        return 0.5 * (np.eye(2) + 2 * sm.along(self.r))


def check_state(rho: np.ndarray, tol: float = TOL_STATE) -> None:
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("state must be a square matrix")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise ValueError("state is not Hermitian")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > tol:
        raise ValueError(f"state trace is {tr!r}, expected 1")
    if np.linalg.eigvalsh(rho).min() < -tol:
        raise ValueError("state is not positive semidefinite")


def check_effect(e: np.ndarray, tol: float = TOL_STATE) -> None:
    e = np.asarray(e)
    if np.max(np.abs(e - e.conj().T)) > tol:
        raise ValueError("POVM element is not Hermitian")
    w = np.linalg.eigvalsh(e)
    if w.min() < -tol or w.max() > 1 + tol:
        raise ValueError("POVM element is not between 0 and 1")


def outcome_probability(state: np.ndarray, povm_element: np.ndarray, tol: float = TOL_STATE) -> float:
    """Tr(rho E), clipped to [0, 1] only when the excursion is within ``tol``."""
    check_state(state, tol)
    check_effect(povm_element, tol)
    p = float(np.real(np.trace(np.asarray(state) @ np.asarray(povm_element))))
    if p < -tol or p > 1 + tol:
        raise ValueError(f"probability {p!r} outside [0, 1]")
    return min(1.0, max(0.0, p))
