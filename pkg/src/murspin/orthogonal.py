"""Two and three orthogonal spin components: cloning marginals, spin-1/2
families, and the ordering table of minimum information losses."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .infoloss import relative_entropy, s_cx
from .minimize import analytic_solution, outer_search, resolve_threads
from .spin import SpinValue, eigen_projection, spin_matrices

AXES = {"x": np.array([1.0, 0.0, 0.0]), "y": np.array([0.0, 1.0, 0.0]), "z": np.array([0.0, 0.0, 1.0])}
ORDERING_CAP = 50


def _axis_name(axis) -> str:
    if isinstance(axis, (int, np.integer)):
        if not 0 <= axis < 3:
            raise ValueError(f"axis index must be 0, 1 or 2, got {axis}")
        return "xyz"[axis]
    name = str(axis).lower()
    if name not in AXES:
        raise ValueError(f"unknown axis {axis!r}")
    return name


@dataclass(frozen=True)
class CloningSpec:
    s: SpinValue
    r: int

    def __post_init__(self):
        object.__setattr__(self, "s", SpinValue.of(self.s))
        if self.r not in (2, 3):
            raise ValueError(f"r must be 2 or 3, got {self.r!r}")

    @property
    def dim(self) -> int:
        return self.s.dim

    def weight(self) -> Fraction:
        """lambda_{d,r} = (d + r)/(r (d + 1))."""
        d = self.dim
        return Fraction(d + self.r, self.r * (d + 1))

    def visibility(self) -> Fraction:
        """(s + r)/(r (s + 1)), the weight of X_i(m) when noise is spread on the other outcomes."""
        s = self.s.fraction
        return (s + self.r) / (self.r * (s + 1))

    def axes(self) -> tuple:
        return ("x", "y", "z")[: self.r]


@dataclass(frozen=True)
class SpinHalfFamilyParam:
    c: float
    r: int

    def __post_init__(self):
        if self.r not in (2, 3):
            raise ValueError(f"r must be 2 or 3, got {self.r!r}")
        if abs(self.c) > 1 / math.sqrt(self.r) + 1e-12:
            raise ValueError(f"|c| must be <= 1/sqrt({self.r}), got {self.c!r}")


def cloning_marginal(spec: CloningSpec, axis, m) -> np.ndarray:
    """lambda X_i(m) + (1 - lambda) 1/d for the optimal r-cloning joint measurement."""
    name = _axis_name(axis)
    if name not in spec.axes():
        raise ValueError(f"axis {name} is not a component for r = {spec.r}")
    lam = float(spec.weight())
    proj = eigen_projection(spec.s, AXES[name], m)
    return lam * proj + (1 - lam) * np.eye(spec.dim) / spec.dim


def cloning_marginals(spec: CloningSpec, axis) -> np.ndarray:
    """All elements for one axis, stacked in m = s..-s order."""
    return np.array([cloning_marginal(spec, axis, tm / 2) for tm in spec.s.twice_ms()])


def cloning_device_loss_exact(spec: CloningSpec) -> Fraction:
    """Argument of the logarithm: 3(s+1)/(s+3) for r = 3, 2(s+1)/(s+2) for r = 2."""
    s = spec.s.fraction
    return spec.r * (s + 1) / (s + spec.r)


def cloning_device_loss(spec: CloningSpec) -> float:
    """Closed-form device loss of the cloning measurement, in bits."""
    return math.log2(cloning_device_loss_exact(spec))


def cloning_device_loss_by_states(spec: CloningSpec) -> float:
    """max over axes and eigenstates X_i(m) of S(target || marginal) from the matrices."""
    worst = 0.0
    for name in spec.axes():
        elems = cloning_marginals(spec, name)
        for k, tm in enumerate(spec.s.twice_ms()):
            rho = eigen_projection(spec.s, AXES[name], tm / 2)
            approx = np.real(np.einsum("ij,mji->m", rho, elems))
            target = np.zeros(spec.dim)
            target[k] = 1.0
            worst = max(worst, relative_entropy(target, approx))
    return worst


def cloning_limit_r2() -> float:
    """s -> infinity value of the r = 2 cloning loss: log2(2)."""
    return 1.0


def spinhalf_family_marginal(param: SpinHalfFamilyParam, axis, m) -> np.ndarray:
    """1/2 + 2 c m S_i."""
    name = _axis_name(axis)
    if name not in ("x", "y", "z")[: param.r]:
        raise ValueError(f"axis {name} is not a component for r = {param.r}")
    tm = round(2 * float(Fraction(m) if isinstance(m, str) else m))
    if tm not in (1, -1):
        raise ValueError("m must be +-1/2")
    sm = spin_matrices(SpinValue(1))
    return 0.5 * np.eye(2) + param.c * tm * sm.along(AXES[name])


def spinhalf_family_loss(c: float) -> float:
    """Device loss of the spin-1/2 family for c >= 0: log2(2/(1 + c))."""
    if c < 0:
        raise ValueError("closed form holds for c >= 0")
    return math.log2(2 / (1 + c))


def spinhalf_family_loss_bruteforce(c: float, step_deg: float = 1.0) -> float:
    """Max of S((1+-x)/2 || (1+-cx)/2) over x = n.r = cos(t), t on a step_deg grid."""
    ts = np.deg2rad(np.arange(0.0, 180.0 + step_deg / 2, step_deg))
    return max(s_cx(c, float(np.clip(math.cos(t), -1.0, 1.0))) for t in ts)


@dataclass(frozen=True)
class SpinHalfOptimum:
    r: int
    info_loss: float
    visibility: float


def spinhalf_min_loss(r: int) -> SpinHalfOptimum:
    """I_{1/2} for r orthogonal components: log2(2/(1 + 1/sqrt r)), visibility (1 + 1/sqrt r)/2."""
    if r not in (2, 3):
        raise ValueError(f"r must be 2 or 3, got {r!r}")
    c = 1 / math.sqrt(r)
    loss = math.log2(2 / (1 + c))
    eta = (1 + c) / 2
    if abs(loss + math.log2(eta)) > 1e-12:
        raise ArithmeticError("loss and visibility are inconsistent")
    return SpinHalfOptimum(r, loss, eta)


# ---------------------------------------------------------------- ordering


@dataclass(frozen=True)
class OrderingRow:
    s: str
    quantity: str
    value: float
    kind: str  # exact | upper-bound | numeric
    checks: tuple = ()


@dataclass(frozen=True)
class OrderingCheck:
    name: str
    relation: str
    s: str
    lhs: float
    rhs: float
    passed: bool


@dataclass
class OrderingReport:
    max_s: SpinValue
    rows: list
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def series(self) -> dict:
        """quantity -> list of (s, value), for x-y data files."""
        out: dict = {}
        for row in self.rows:
            out.setdefault(row.quantity, []).append((float(Fraction(row.s)), row.value))
        return out

    def to_dict(self) -> dict:
        return {
            "max_s": str(self.max_s),
            "passed": self.passed,
            "rows": [
                {"s": r.s, "quantity": r.quantity, "value": r.value, "kind": r.kind,
                 "checks": {name: ok for name, ok in r.checks}}
                for r in self.rows
            ],
            "checks": [
                {"name": c.name, "relation": c.relation, "s": c.s, "lhs": c.lhs, "rhs": c.rhs, "passed": c.passed}
                for c in self.checks
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["s", "quantity", "value", "kind", "checks"])
        for r in self.rows:
            flags = ";".join(f"{name}={'pass' if ok else 'fail'}" for name, ok in r.checks)
            w.writerow([r.s, r.quantity, f"{r.value:.17g}", r.kind, flags])
        return buf.getvalue()

    def checks_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["name", "relation", "s", "lhs", "rhs", "passed"])
        for c in self.checks:
            w.writerow([c.name, c.relation, c.s, f"{c.lhs:.17g}", f"{c.rhs:.17g}", str(c.passed).lower()])
        return buf.getvalue()

    def to_table(self) -> str:
        lines = [f"{'s':>5}  {'quantity':<16} {'value':>20}  kind"]
        for r in self.rows:
            lines.append(f"{r.s:>5}  {r.quantity:<16} {r.value:>20.15f}  {r.kind}")
        lines.append("")
        for c in self.checks:
            mark = "PASS" if c.passed else "FAIL"
            lines.append(f"{mark}  {c.name:<12} s={c.s:<5} {c.relation}  ({c.lhs:.12g} vs {c.rhs:.12g})")
        return "\n".join(lines)


def _compare(lhs: float, rhs: float, strict: bool, margin: float) -> bool:
    if strict:
        return rhs - lhs > margin
    return lhs <= rhs + max(margin, 1e-12)


def ordering_report(max_s, numeric_max=None, tol: float = 1e-8, seed: int = 0,
                    threads: Optional[int] = None, cap=ORDERING_CAP) -> OrderingReport:
    """Losses for two, three and all components per s, with the ordering inequalities.

    For s > 1/2 the two- and three-component entries are cloning upper bounds.
    All-component losses are closed form for s <= 3/2 and numeric for
    3/2 < s <= numeric_max.
    """
    top = SpinValue.of(max_s)
    if top > SpinValue.of(cap):
        raise ValueError(f"max_s = {top} exceeds the cap {SpinValue.of(cap)}")
    numeric_top = SpinValue.of(numeric_max) if numeric_max is not None else SpinValue(3)
    spins = [SpinValue(t) for t in range(1, top.twice_s + 1)]

    exact_inf = {t: analytic_solution(SpinValue(t)).info_loss for t in (1, 2, 3)}
    numeric_spins = [sp for sp in spins if 3 < sp.twice_s <= numeric_top.twice_s]
    n_threads = resolve_threads(threads)
    if n_threads > 1 and len(numeric_spins) > 1:
        with ThreadPoolExecutor(n_threads) as pool:
            numeric = list(pool.map(lambda sp: outer_search(sp, tol, seed=seed), numeric_spins))
    else:
        numeric = [outer_search(sp, tol, seed=seed) for sp in numeric_spins]
    numeric_inf = {sp.twice_s: rep for sp, rep in zip(numeric_spins, numeric)}

    half2, half3 = spinhalf_min_loss(2), spinhalf_min_loss(3)
    i1, i32 = exact_inf[2], exact_inf[3]

    # best available value (and how it is known) of I_s[A_r]
    def a_r(sp: SpinValue, r: int):
        if sp.twice_s == 1:
            return (half2 if r == 2 else half3).info_loss, "exact"
        return cloning_device_loss(CloningSpec(sp, r)), "upper-bound"

    checks: list[OrderingCheck] = []
    row_checks: dict = {}

    def add(name, relation, sp, lhs, rhs, strict, margin=0.0, rows=()):
        ok = _compare(lhs, rhs, strict, margin)
        checks.append(OrderingCheck(name, relation, str(sp), float(lhs), float(rhs), ok))
        for key in rows:
            row_checks.setdefault(key, []).append((name, ok))

    for sp in spins:
        s = sp.fraction
        v2, _ = a_r(sp, 2)
        v3, _ = a_r(sp, 3)
        add("Ibounds.1", "I_s[A2] <= 1", sp, v2, 1.0, False, rows=[(sp, "A2")])
        add("Ibounds.2", "I_s[A3] <= log2 3", sp, v3, math.log2(3), False, rows=[(sp, "A3")])
        if s <= 3:
            add("Ibounds.3", "I_s[A3] <= 1", sp, v3, 1.0, False, rows=[(sp, "A3")])
            add("Iorder.1", "I_s[A2] <= I_1[Ainf]", sp, v2, i1, False, rows=[(sp, "A2")])
        if s in (Fraction(1, 2), 1):
            add("Iorder.2", "I_s[A3] < I_1[Ainf]", sp, v3, i1, True, rows=[(sp, "A3")])
        if s <= 11:
            add("Iorder.3", "I_s[A2] < I_3/2[Ainf]", sp, v2, i32, True, rows=[(sp, "A2")])
        if s <= 2:
            add("Iorder.4", "I_s[A3] < I_3/2[Ainf]", sp, v3, i32, True, rows=[(sp, "A3")])
        for r in (2, 3):
            spec = CloningSpec(sp, r)
            eta = float(spec.visibility())
            add(f"visibility.r{r}", "Delta_cl = log2(1/eta_cl)", sp,
                cloning_device_loss(spec), -math.log2(eta), False, rows=[(sp, f"cl{r}")])
    add("Iorder.1", "I_1[Ainf] < 1", SpinValue(2), i1, 1.0, True)

    first = SpinValue(1)
    add("A23infty.1", "0 < I_1/2[A2]", first, 0.0, half2.info_loss, True, rows=[(first, "A2")])
    add("A23infty.2", "I_1/2[A2] < I_1/2[A3]", first, half2.info_loss, half3.info_loss, True,
        rows=[(first, "A2"), (first, "A3")])
    add("A23infty.3", "I_1/2[A3] < I_1/2[Ainf]", first, half3.info_loss, exact_inf[1], True,
        rows=[(first, "A3"), (first, "inf")])
    if top.twice_s >= 2:
        add("chain.1", "I_1/2[Ainf] < I_1[Ainf]", SpinValue(2), exact_inf[1], i1, True)
    if top.twice_s >= 3:
        add("chain.2", "I_1[Ainf] < I_3/2[Ainf]", SpinValue(3), i1, i32, True)
    if top.twice_s >= 4:
        eq = cloning_device_loss_exact(CloningSpec(SpinValue(2), 3)) == cloning_device_loss_exact(
            CloningSpec(SpinValue(4), 2)
        )
        checks.append(OrderingCheck("cloning.eq", "Delta(s=1,r=3) == Delta(s=2,r=2) == log2(3/2)", "1,2",
                                    cloning_device_loss(CloningSpec(SpinValue(2), 3)),
                                    cloning_device_loss(CloningSpec(SpinValue(4), 2)),
                                    eq and cloning_device_loss_exact(CloningSpec(SpinValue(2), 3)) == Fraction(3, 2)))
    if top.twice_s >= 6:
        lim = cloning_device_loss_exact(CloningSpec(SpinValue(6), 3))
        checks.append(OrderingCheck("cloning.limit", "lim_s Delta(s,r=2) == Delta(s=3,r=3)", "3",
                                    cloning_limit_r2(), math.log2(lim), lim == 2))

    rows: list[OrderingRow] = []
    for sp in spins:
        label = str(sp)
        for r in (2, 3):
            v, kind = a_r(sp, r)
            rows.append(OrderingRow(label, f"I_A{r}", v, kind, tuple(row_checks.get((sp, f"A{r}"), ()))))
        for r in (2, 3):
            rows.append(OrderingRow(label, f"Delta_cl{r}", cloning_device_loss(CloningSpec(sp, r)),
                                    "upper-bound", tuple(row_checks.get((sp, f"cl{r}"), ()))))
        if sp.twice_s <= 3:
            rows.append(OrderingRow(label, "I_Ainf", exact_inf[sp.twice_s], "exact",
                                    tuple(row_checks.get((sp, "inf"), ()))))
        elif sp.twice_s in numeric_inf:
            rep = numeric_inf[sp.twice_s]
            rows.append(OrderingRow(label, "I_Ainf", rep.info_loss, "numeric",
                                    (("converged", rep.converged),)))
    return OrderingReport(top, rows, checks)


__all__ = [
    "CloningSpec",
    "SpinHalfFamilyParam",
    "cloning_marginal",
    "cloning_device_loss",
    "cloning_device_loss_by_states",
    "spinhalf_family_marginal",
    "spinhalf_min_loss",
    "ordering_report",
]
