"""Minimum information loss: the max-min problem over mixture weights and grids.

The inner problem (weights at a fixed grid) is an exact LP.  The outer
problem over the floor(s) free interior cosines is a small derivative-free
search: a lattice of starts, then coordinate golden-section line searches and a
shrinking pattern search on the best starts.
"""

from __future__ import annotations

import itertools
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .lp import solve_lp
from .qcoeff import GRID_MIN_GAP, AngleGrid, LambdaWeights, QTable, q_diagonal, q_table
from .spin import SpinValue, format_half

LATTICE_LEVELS = 7
MAX_STARTS = 2401
REFINE_STARTS = 3
STEP_FLOOR = 1e-13
CROSSING_TOL = 1e-9
CERTIFY_TOL_I = 1e-6
CERTIFY_TOL_A = 1e-4
UNVERIFIED = "unverified against closed form"


class BoundViolation(ValueError):
    pass


# ---------------------------------------------------------------- inner LP


@dataclass(frozen=True)
class InnerSolution:
    lambdas: LambdaWeights
    value: float
    duals: tuple  # weights mu_m on the constraints t <= sum_l lambda_l Q[m, l]
    slackness: float  # worst complementary-slackness violation


def _lp_max_min(Q: np.ndarray):
    d_m, d_l = Q.shape
    c = np.zeros(d_l + 1)
    c[-1] = 1.0
    A_ub = np.hstack([-Q, np.ones((d_m, 1))])
    A_eq = np.zeros((1, d_l + 1))
    A_eq[0, :d_l] = 1.0
    res = solve_lp(c, A_ub, np.zeros(d_m), A_eq, [1.0])
    return res, A_ub, A_eq


def max_min_value(Q: np.ndarray) -> float:
    """max over the simplex of min_m (Q lambda)_m; no tie-break."""
    res, _, _ = _lp_max_min(np.asarray(Q, dtype=float))
    return float(res.x[-1])


def complementary_slackness(Q, lam, mu, value) -> float:
    """Largest violation of the primal/dual optimality conditions.

    Covers dual feasibility (mu on the simplex, (mu Q)_l <= value), primal
    activity (mu_m > 0 only where (Q lam)_m = value) and support of lambda
    (lam_l > 0 only where (mu Q)_l = value).
    """
    Q = np.asarray(Q, dtype=float)
    lam = np.asarray(lam, dtype=float)
    mu = np.asarray(mu, dtype=float)
    reduced = mu @ Q
    row_vals = Q @ lam
    viol = [
        max(0.0, -mu.min()),
        abs(mu.sum() - 1.0),
        max(0.0, (reduced - value).max()),
        float(np.max(mu * (row_vals - value))),
        float(np.max(lam * (value - reduced))),
        max(0.0, value - row_vals.min()),
    ]
    return float(max(viol))


def inner_solution(qtable: QTable, tie_tol: float = 1e-12) -> InnerSolution:
    """Exact LP for max_lambda min_m sum_l lambda_l q(m|l,m), with the
    lexicographically largest optimal lambda (mass pushed to l = s first)."""
    Q = qtable.diagonal()
    d = Q.shape[1]
    res, A_ub, A_eq = _lp_max_min(Q)
    value = float(res.x[-1])
    mu = np.clip(res.duals_ub, 0.0, None)
    if mu.sum() > 0:
        mu = mu / mu.sum()

    # lexicographic tie-break over the optimal face
    fixed: list[float] = []
    lam = res.x[:d].copy()
    floor = value - tie_tol * max(1.0, abs(value))
    for k in range(d):
        c = np.zeros(d + 1)
        c[k] = 1.0
        rows = [A_ub, -np.eye(1, d + 1, d)]
        rhs = [np.zeros(A_ub.shape[0]), [-floor]]
        eq_rows = [A_eq]
        eq_rhs = [1.0]
        for j, v in enumerate(fixed):
            e = np.eye(1, d + 1, j)
            rows += [e, -e]
            rhs += [[v + tie_tol], [-(v - tie_tol)]]
        sub = solve_lp(c, np.vstack(rows), np.concatenate(rhs), np.vstack(eq_rows), eq_rhs)
        fixed.append(float(sub.x[k]))
        lam = sub.x[:d]
    lam = np.clip(lam, 0.0, None)
    lam = lam / lam.sum()
    # drop tolerance-level mass when that costs nothing
    snapped = np.where(lam < 1e-9, 0.0, lam)
    snapped = snapped / snapped.sum()
    if (Q @ snapped).min() >= (Q @ lam).min() - 1e-15:
        lam = snapped
    # re-evaluate so the reported value belongs to the returned lambda
    value = float((Q @ lam).min())
    slack = complementary_slackness(Q, lam, mu, value)
    return InnerSolution(LambdaWeights(qtable.twice_s, tuple(lam)), value, tuple(mu), slack)


def inner_max_min(qtable: QTable) -> tuple[LambdaWeights, float]:
    sol = inner_solution(qtable)
    return sol.lambdas, sol.value


# --------------------------------------------------------------- analytic


def _safeguarded_newton(f, df, lo: float, hi: float, tol: float = 1e-15, max_iter: int = 200) -> float:
    """Root of f in [lo, hi] (sign change required); Newton with bisection fallback."""
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if flo * fhi > 0:
        raise ValueError("no sign change on the bracket")
    x = 0.5 * (lo + hi)
    for _ in range(max_iter):
        fx = f(x)
        if fx == 0:
            return x
        if (fx > 0) == (flo > 0):
            lo, flo = x, fx
        else:
            hi = x
        dfx = df(x)
        step_ok = dfx != 0
        if step_ok:
            nx = x - fx / dfx
            step_ok = lo < nx < hi
        if not step_ok:
            nx = 0.5 * (lo + hi)
        if abs(nx - x) <= tol * max(1.0, abs(x)) or hi - lo <= tol:
            return nx
        x = nx
    return x


def a0_spin_one_trig() -> float:
    """Root of a^3 - a^2 - 5a + 7/3 in (0, 1) from the trigonometric form
    a = (1 + 8 cos(alpha))/3 with cos(3 alpha - pi) = 1/8."""
    # of the admissible alphas, this branch gives the root inside (0, 1)
    alpha = (math.pi + math.acos(1 / 8)) / 3
    return (1 + 8 * math.cos(alpha)) / 3


def a0_spin_one_newton() -> float:
    return _safeguarded_newton(
        lambda a: a**3 - a**2 - 5 * a + 7 / 3,
        lambda a: 3 * a**2 - 2 * a - 5,
        0.0,
        1.0,
    )


def a0_spin_three_halves() -> float:
    return _safeguarded_newton(
        lambda a: a**4 - 6 * a**2 - 8 * a + 7.5,
        lambda a: 4 * a**3 - 12 * a - 8,
        0.0,
        1.0,
    )


# ----------------------------------------------------------------- report


@dataclass(frozen=True)
class LossReport:
    s: SpinValue
    lambdas_opt: LambdaWeights
    grid_opt: AngleGrid
    k_value: float
    solver_trace: tuple = ()
    method: str = "numeric"
    converged: bool = True
    verified: Optional[bool] = None
    bracket_width: float = 0.0
    note: str = ""
    analytic: Optional["LossReport"] = None
    checks: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0 < self.k_value <= 1 + 1e-12:
            raise BoundViolation(f"K_s = {self.k_value!r} outside (0, 1]")

    @property
    def info_loss(self) -> float:
        return -math.log2(self.k_value)

    @property
    def visibility(self) -> float:
        return self.k_value

    @property
    def a0(self) -> Optional[float]:
        return self.grid_opt.cosines[1] if self.s.n_free_angles == 1 else None

    def to_dict(self, trace: bool = True) -> dict:
        out = {
            "s": str(self.s),
            "method": self.method,
            "k_value": self.k_value,
            "info_loss": self.info_loss,
            "visibility": self.visibility,
            "lambdas_opt": {format_half(tm): w for tm, w in zip(self.s.twice_ms(), self.lambdas_opt.weights)},
            "grid_cosines": list(self.grid_opt.cosines),
            "free_cosines": list(self.grid_opt.free),
            "converged": self.converged,
            "verified": self.verified,
            "bracket_width": self.bracket_width,
            "note": self.note,
            "checks": dict(self.checks),
        }
        if self.a0 is not None:
            out["a0"] = self.a0
        if self.analytic is not None:
            out["analytic"] = self.analytic.to_dict(trace=False)
        if trace:
            out["solver_trace"] = [dict(t) for t in self.solver_trace]
        return out

    def to_json(self, trace: bool = True) -> str:
        return json.dumps(self.to_dict(trace), indent=2, sort_keys=True)

    def table_rows(self) -> list[tuple[str, str]]:
        rows = [
            ("s", str(self.s)),
            ("method", self.method),
            ("K_s", f"{self.k_value:.17g}"),
            ("I_s [bits]", f"{self.info_loss:.17g}"),
            ("visibility", f"{self.visibility:.17g}"),
        ]
        if self.a0 is not None:
            rows.append(("a0", f"{self.a0:.17g}"))
        rows.append(("free cosines", ", ".join(f"{c:.12g}" for c in self.grid_opt.free) or "-"))
        rows.append(
            (
                "lambda",
                ", ".join(
                    f"{format_half(tm)}:{w:.6g}" for tm, w in zip(self.s.twice_ms(), self.lambdas_opt.weights)
                ),
            )
        )
        rows.append(("converged", str(self.converged)))
        rows.append(("verified", str(self.verified)))
        if self.note:
            rows.append(("note", self.note))
        return rows

    def to_table(self) -> str:
        rows = self.table_rows()
        width = max(len(k) for k, _ in rows)
        return "\n".join(f"{k.ljust(width)}  {v}" for k, v in rows)


def analytic_solution(s) -> LossReport:
    """Closed-form optimum for s in {1/2, 1, 3/2}; the optimal weights are delta at l = s."""
    spin = SpinValue.of(s)
    lam = LambdaWeights.delta(spin, spin.s)
    if spin.twice_s == 1:
        grid = AngleGrid(1, (1.0, 0.0, -1.0))
        k = 0.75
        trace = ({"phase": "analytic", "root": None},)
    elif spin.twice_s == 2:
        a = a0_spin_one_trig()
        grid = AngleGrid.from_a(spin, a)
        k = a * (3 - a * a) / 2
        trace = ({"phase": "analytic", "root": a, "newton_root": a0_spin_one_newton()},)
    elif spin.twice_s == 3:
        a = a0_spin_three_halves()
        grid = AngleGrid.from_a(spin, a)
        k = (45 - 24 * a - 24 * a * a - 8 * a**3) / 32
        trace = ({"phase": "analytic", "root": a},)
    else:
        raise ValueError(f"no closed-form solution for s = {spin}")
    return LossReport(spin, lam, grid, k, trace, method="analytic", converged=True, verified=True)


def bias_closed_three_halves(a: float) -> float:
    """Mixed-state bias of the optimal spin-3/2 measurement as a function of a."""
    return 0.5 * math.log2(1 / (4 * a * (1 - a)))


def bound_check(report: LossReport, strict: bool = True) -> LossReport:
    """Check 0 < I_s <= log2(2s+1) and, for s in {1, 3/2}, that the two active
    diagonal coefficients cross at the optimum."""
    spin = report.s
    checks = {
        "positive": report.info_loss > 0,
        "below_log_dim": report.info_loss <= math.log2(spin.dim) + 1e-12,
    }
    if spin.twice_s in (2, 3):
        table = q_table(spin, report.grid_opt)
        top = spin.s
        gap = abs(table(top, top, top) - table(top - 1, top, top - 1))
        checks["crossing"] = gap <= CROSSING_TOL
        checks["crossing_gap"] = gap
    failed = [k for k, v in checks.items() if v is False]
    if failed and strict:
        raise BoundViolation(f"bound check failed for s = {spin}: {', '.join(failed)}")
    return replace(report, checks={**report.checks, **checks})


# ------------------------------------------------------------ outer search


def resolve_threads(threads: Optional[int]) -> int:
    if threads is None:
        env = os.environ.get("MURSPIN_THREADS")
        threads = int(env) if env else 1
    if threads < 1:
        raise ValueError("threads must be >= 1")
    return threads


class _Objective:
    """K(c) at fixed spin, with the ordering constraints of the free cosines."""

    def __init__(self, spin: SpinValue, gap: float):
        self.spin = spin
        self.k = spin.n_free_angles
        self.gap = gap
        # integer s: the innermost cell is (-c_k, c_k); half-integer: (0, c_k)
        self.last_floor = gap / 2 if spin.twice_s % 2 == 0 else gap
        self.evals = 0

    def feasible(self, free) -> bool:
        if len(free) == 0:
            return True
        if free[0] > 1 - self.gap or free[-1] < self.last_floor:
            return False
        return all(free[j] - free[j + 1] >= self.gap for j in range(len(free) - 1))

    def bounds(self, free, j) -> tuple[float, float]:
        hi = (1.0 if j == 0 else free[j - 1]) - self.gap
        lo = self.last_floor if j == self.k - 1 else free[j + 1] + self.gap
        return lo, hi

    def cosines(self, free) -> np.ndarray:
        free = list(free)
        mid = [0.0] if self.spin.twice_s % 2 else []
        return np.array([1.0] + free + mid + [-v for v in reversed(free)] + [-1.0])

    def __call__(self, free) -> float:
        if not self.feasible(free):
            return -math.inf
        self.evals += 1
        return max_min_value(q_diagonal(self.spin, self.cosines(free)))


def lattice_starts(k: int, levels: int = LATTICE_LEVELS, cap: int = MAX_STARTS, seed: int = 0) -> np.ndarray:
    """Start points in u-space mapped to descending cosines c_j = prod_{i<=j} u_i.

    Full lattice of levels^k points when it fits under ``cap``, otherwise a
    seeded random subset of it.
    """
    if k == 0:
        return np.zeros((1, 0))
    u_levels = (np.arange(levels) + 1) / (levels + 1)
    total = levels**k
    if total <= cap:
        us = np.array(list(itertools.product(u_levels, repeat=k)))
    else:
        rng = np.random.default_rng(seed)
        idx = rng.choice(total, size=cap, replace=False)
        idx.sort()
        digits = np.array([[(i // levels**p) % levels for p in reversed(range(k))] for i in idx])
        us = u_levels[digits]
    return np.cumprod(us, axis=1)


def _golden(f, lo: float, hi: float, x0: float, f0: float, tol: float):
    """Golden-section maximization of a unimodal f on [lo, hi]; keeps (x0, f0) if better."""
    g = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c = b - g * (b - a)
    d = a + g * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    best = max([(f0, x0), (fc, c), (fd, d)], key=lambda t: t[0])
    return best[1], best[0]


def _directions(k: int, rng: np.random.Generator, n_random: int = 4) -> list[np.ndarray]:
    dirs = []
    eye = np.eye(k)
    for i in range(k):
        dirs += [eye[i], -eye[i]]
    if k > 1:
        for signs in itertools.product((1, -1), repeat=k):
            v = np.array(signs, dtype=float)
            dirs.append(v / np.linalg.norm(v))
        for _ in range(n_random):
            v = rng.normal(size=k)
            dirs.append(v / np.linalg.norm(v))
    return dirs


def _refine(obj: _Objective, x0: np.ndarray, f0: float, tol: float, rng: np.random.Generator, label: int):
    """Coordinate golden sections, then a shrinking pattern search.  Only
    improvements are accepted, so the incumbent value never decreases."""
    x, fx = np.array(x0, dtype=float), f0
    trace = [{"phase": "start", "start": label, "k_value": fx, "free": x.tolist()}]
    k = obj.k

    for sweep in range(50):
        before = fx
        for j in range(k):
            lo, hi = obj.bounds(x, j)
            if hi <= lo:
                continue

            def line(t, j=j):
                y = x.copy()
                y[j] = t
                return obj(y)

            t, ft = _golden(line, lo, hi, x[j], fx, STEP_FLOOR * 10)
            if ft > fx:
                x[j], fx = t, ft
        trace.append({"phase": "golden", "start": label, "sweep": sweep, "k_value": fx, "free": x.tolist()})
        if fx - before <= tol * 1e-3:
            break

    step = 1e-2
    dirs = _directions(k, rng)
    spread = math.inf
    while step >= STEP_FLOOR:
        vals = [obj(x + step * v) for v in dirs]
        best = int(np.argmax(vals))
        if vals[best] > fx:
            x, fx = x + step * dirs[best], vals[best]
            trace.append({"phase": "pattern", "start": label, "step": step, "k_value": fx, "free": x.tolist()})
            continue
        finite = [v for v in vals if math.isfinite(v)]
        spread = fx - min(finite) if finite else 0.0
        if spread < tol * 1e-3:
            break
        step /= 2
    trace.append({"phase": "done", "start": label, "step": step, "bracket_width": spread, "k_value": fx})
    return x, fx, spread, trace


def outer_search(s, tol: float = 1e-8, seed: int = 0, threads: Optional[int] = None,
                 levels: int = LATTICE_LEVELS, max_starts: int = MAX_STARTS,
                 refine_starts: int = REFINE_STARTS, certify: bool = True) -> LossReport:
    """K_s = sup over grids of the inner LP value, by multistart plus local refinement.

    The result is checked against the closed form for s <= 3/2; larger spins
    are reported as numerical only.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    spin = SpinValue.of(s)
    n_threads = resolve_threads(threads)
    obj = _Objective(spin, GRID_MIN_GAP)
    k = spin.n_free_angles
    trace: list[dict] = []

    if k == 0:
        x_best, f_best, spread, converged = np.zeros(0), obj([]), 0.0, True
        trace.append({"phase": "fixed-grid", "k_value": f_best})
    else:
        starts = lattice_starts(k, levels, max_starts, seed)
        starts = [st for st in starts if obj.feasible(st)]
        if n_threads > 1:
            with ThreadPoolExecutor(n_threads) as pool:
                vals = list(pool.map(obj, starts))
        else:
            vals = [obj(st) for st in starts]
        order = sorted(range(len(starts)), key=lambda i: (-vals[i], i))
        trace.append({"phase": "multistart", "n_starts": len(starts), "k_value": vals[order[0]],
                      "free": list(starts[order[0]])})
        chosen = order[:refine_starts]
        rngs = [np.random.default_rng([seed, i]) for i in chosen]
        jobs = [(starts[i], vals[i], rngs[n], i) for n, i in enumerate(chosen)]
        if n_threads > 1:
            with ThreadPoolExecutor(n_threads) as pool:
                results = list(pool.map(lambda j: _refine(obj, j[0], j[1], tol, j[2], j[3]), jobs))
        else:
            results = [_refine(obj, *j[:2], tol, j[2], j[3]) for j in jobs]
        best = max(range(len(results)), key=lambda n: (results[n][1], -n))
        x_best, f_best, spread, _ = results[best]
        for r in results:
            trace.extend(r[3])
        converged = spread < tol

    grid = AngleGrid(spin.twice_s, tuple(obj.cosines(x_best)))
    sol = inner_solution(q_table(spin, grid))
    trace.append({"phase": "final", "k_value": sol.value, "evaluations": obj.evals,
                  "slackness": sol.slackness, "lambda_mass_top": sol.lambdas.weights[0]})
    report = LossReport(
        spin, sol.lambdas, grid, sol.value, tuple(trace),
        method="numeric", converged=converged, bracket_width=float(spread),
    )
    if not converged:
        report = replace(report, note=f"refinement stalled with bracket width {spread:.3g} > tol")
    if certify:
        report = certify_report(report)
    return report


def certify_report(report: LossReport) -> LossReport:
    if report.s.twice_s > 3:
        note = UNVERIFIED if not report.note else f"{report.note}; {UNVERIFIED}"
        return replace(report, verified=False, note=note)
    ref = analytic_solution(report.s)
    ok = abs(report.info_loss - ref.info_loss) <= CERTIFY_TOL_I
    if ref.a0 is not None:
        ok = ok and abs(report.a0 - ref.a0) <= CERTIFY_TOL_A
    return replace(report, verified=ok, analytic=ref)
