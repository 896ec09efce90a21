"""Relative entropy, device information loss and noisy-version decompositions.

All entropies are in bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .qcoeff import (
    _as_grid,
    _as_lambdas,
    marginal_distribution,
    q_table,
)
from .spin import SpinValue, eigen_projection, eigen_projections, maximally_mixed

PROB_TOL = 1e-10

# distinguished value for disjoint supports
INFINITE_LOSS = math.inf


class ProbVector:
    """Probability vector; drifts up to 1e-10 are renormalized, larger ones rejected."""

    __slots__ = ("p",)

    def __init__(self, values, tol: float = PROB_TOL):
        p = np.asarray(values, dtype=float).ravel()
        if p.size == 0 or not np.isfinite(p).all():
            raise ValueError("probability vector must be finite and non-empty")
        if p.min() < -tol:
            raise ValueError(f"negative probability {p.min()!r}")
        total = p.sum()
        if abs(total - 1.0) > tol:
            raise ValueError(f"probabilities sum to {total!r}")
        p = np.clip(p, 0.0, None)
        self.p = p / p.sum()

    def __len__(self):
        return len(self.p)

    def __array__(self, dtype=None, copy=None):
        return self.p if dtype is None else self.p.astype(dtype)

    def __repr__(self):
        return f"ProbVector({self.p.tolist()})"


def _prob(v) -> ProbVector:
    return v if isinstance(v, ProbVector) else ProbVector(v)


def relative_entropy(p, q) -> float:
    """S(p||q) = sum p log2(p/q) with 0 log 0 = 0; ``inf`` when supp p is not in supp q."""
    p, q = _prob(p).p, _prob(q).p
    if p.shape != q.shape:
        raise ValueError("distributions have different lengths")
    mask = p > 0
    if (q[mask] == 0).any():
        return INFINITE_LOSS
    val = float(np.sum(p[mask] * (np.log2(p[mask]) - np.log2(q[mask]))))
    return max(val, 0.0)


def visibility(s, lambdas, grid) -> float:
    """eta = min_m sum_l q(m|l,m) lambda_l."""
    spin = SpinValue.of(s)
    lam = _as_lambdas(spin, lambdas).array()
    diag = q_table(spin, _as_grid(spin, grid)).diagonal()
    return float((diag @ lam).min())


def device_loss_closed(s, lambdas, grid) -> float:
    """Worst-case loss from the q-coefficients: log2(1 / min_m sum_l lambda_l q(m|l,m))."""
    return -math.log2(visibility(s, lambdas, grid))


def device_loss_by_states(s, lambdas, grid, n) -> float:
    """Same loss as a maximum of relative entropies over the eigenstates A_n(m)."""
    spin = SpinValue.of(s)
    worst = 0.0
    for tm in spin.twice_ms():
        rho = eigen_projection(spin, n, tm / 2)
        target = _target(spin, n, rho)
        approx = marginal_distribution(spin, lambdas, grid, n, rho)
        worst = max(worst, relative_entropy(target, approx))
    return worst


def _target(spin, n, rho):
    proj = eigen_projections(spin, n)
    return np.clip(np.real(np.einsum("ij,hji->h", rho, proj)), 0.0, None)


@dataclass(frozen=True)
class NoisyDecomposition:
    """M(m) = visibility * A_n(m) + (1 - visibility) * noise(m)."""

    visibility: float
    noise_elements: np.ndarray  # [i_m, d, d]
    target_elements: np.ndarray
    marginal_elements: np.ndarray

    def reconstruction_error(self) -> float:
        eta = self.visibility
        rebuilt = eta * self.target_elements + (1 - eta) * self.noise_elements
        return float(np.abs(rebuilt - self.marginal_elements).max())


def noisy_decomposition(s, lambdas, grid, n) -> NoisyDecomposition:
    """Maximal-visibility split of the approximate spin component into target plus noise."""
    spin = SpinValue.of(s)
    lam = _as_lambdas(spin, lambdas).array()
    table = q_table(spin, _as_grid(spin, grid))
    trans = np.einsum("mlh,l->mh", table.q, lam)  # [i_m, i_h]
    diag = np.diag(trans).copy()
    eta = float(diag.min())
    proj = eigen_projections(spin, n)
    noise_weights = trans.copy()
    np.fill_diagonal(noise_weights, diag - eta)
    noise = np.einsum("mh,hij->mij", noise_weights, proj) / (1 - eta)
    marginal = np.einsum("mh,hij->mij", trans, proj)
    return NoisyDecomposition(eta, noise, proj, marginal)


def s_cx(c: float, x: float) -> float:
    """Binary relative entropy between (1 +- x)/2 and (1 +- c x)/2, in bits."""
    if not abs(c) < 1:
        raise ValueError("|c| must be < 1")
    if not abs(x) <= 1:
        raise ValueError("|x| must be <= 1")
    total = 0.0
    for sign in (1, -1):
        p = (1 + sign * x) / 2
        if p > 0:
            total += p * math.log2((1 + sign * x) / (1 + sign * c * x))
    return max(total, 0.0)


def mixed_state_bias(s, lambdas, grid) -> float:
    """S(uniform || M^rho0): zero exactly for the equal-width grid."""
    spin = SpinValue.of(s)
    uniform = np.full(spin.dim, 1.0 / spin.dim)
    k = np.array([0.0, 0.0, 1.0])
    approx = marginal_distribution(spin, lambdas, grid, k, maximally_mixed(spin))
    return relative_entropy(uniform, approx)


def bias_from_cells(grid) -> float:
    """Closed form of the mixed-state bias: on rho0 the marginal is (c_k - c_{k+1})/2."""
    c = np.asarray(grid.cosines)
    d = len(c) - 1
    cells = (c[:-1] - c[1:]) / 2
    return float(np.sum(np.log2((1.0 / d) / cells)) / d)

