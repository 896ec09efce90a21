"""Acceptance criteria, one test each.

Every test records a single PASS/FAIL line; the lines are printed in the
pytest terminal summary and when this file is run as a script.
"""

import math
import sys
import time
from fractions import Fraction

import numpy as np

from murspin.infoloss import device_loss_by_states, device_loss_closed, mixed_state_bias
from murspin.minimize import (
    a0_spin_one_newton,
    a0_spin_one_trig,
    analytic_solution,
    bias_closed_three_halves,
    outer_search,
)
from murspin.orthogonal import CloningSpec, cloning_device_loss, cloning_device_loss_exact, ordering_report
from murspin.qcoeff import AngleGrid, LambdaWeights, q_closed_form, q_table
from murspin.spin import SpinValue, direction
from murspin.wigner import check_d_identities

from conftest import ACCEPTANCE_LINES, grid_from_weights

TIMINGS: dict = {}


def record(num: int, title: str, ok: bool, detail: str, elapsed: float) -> None:
    TIMINGS[num] = elapsed
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num:>2}: {title} | {detail} | {elapsed:.2f}s"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_01_spin_half_min_loss():
    t0 = time.perf_counter()
    rep = outer_search("1/2", 1e-8)
    dt = time.perf_counter() - t0
    err = abs(rep.info_loss - math.log2(4 / 3))
    err_printed = abs(rep.info_loss - 0.415037)
    ok = err <= 1e-6 and err_printed <= 1e-6 and dt < 1.0
    record(1, "I_1/2 = log2(4/3)", ok, f"I={rep.info_loss:.12f} |dI|={err:.2e} vs 0.415037: {err_printed:.2e}", dt)


def test_criterion_02_spin_one():
    t0 = time.perf_counter()
    rep = outer_search(1, 1e-8)
    trig, newton = a0_spin_one_trig(), a0_spin_one_newton()
    dt = time.perf_counter() - t0
    d_i = abs(rep.info_loss - 0.682505)
    d_a = abs(rep.a0 - 0.444703)
    d_root = abs(trig - newton)
    ok = d_i <= 1e-5 and d_a <= 1e-4 and d_root <= 1e-10 and dt < 5.0
    record(2, "spin-1 optimum", ok,
           f"I={rep.info_loss:.10f} (|d|={d_i:.1e}) a0={rep.a0:.10f} (|d|={d_a:.1e}) trig-newton={d_root:.1e}", dt)


def test_criterion_03_spin_three_halves():
    t0 = time.perf_counter()
    rep = outer_search("3/2", 1e-8)
    dt = time.perf_counter() - t0
    d_i = abs(rep.info_loss - 0.88615563)
    d_a = abs(rep.a0 - 0.6461537831)
    d_eta = abs(rep.visibility - 0.541054)
    ok = d_i <= 1e-6 and d_a <= 1e-7 and d_eta <= 1e-5 and dt < 10.0
    record(3, "spin-3/2 optimum", ok,
           f"I={rep.info_loss:.10f} (|d|={d_i:.1e}) a0={rep.a0:.12f} (|d|={d_a:.1e}) eta={rep.visibility:.8f} (|d|={d_eta:.1e})",
           dt)


def test_criterion_04_biases():
    t0 = time.perf_counter()
    one = analytic_solution(1)
    b1 = mixed_state_bias(1, one.lambdas_opt, one.grid_opt)
    three = analytic_solution("3/2")
    b32 = bias_closed_three_halves(three.a0)
    b32_direct = mixed_state_bias("3/2", three.lambdas_opt, three.grid_opt)
    dt = time.perf_counter() - t0
    ok1 = abs(b1 - 0.103607) <= 1e-5
    ok32 = abs(b32 - 0.0644281) <= 1e-6 and abs(b32 - b32_direct) <= 1e-12
    record(4, "mixed-state biases", ok1 and ok32,
           f"spin-1 bias={b1:.10f} vs 0.103607 ({'ok' if ok1 else 'MISMATCH'}); "
           f"spin-3/2 bias={b32:.10f} vs 0.0644281 ({'ok' if ok32 else 'MISMATCH'})", dt)


def test_criterion_05_closed_form_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    worst = 0.0
    for twice in (1, 2, 3):
        spin = SpinValue(twice)
        for a in rng.uniform(1e-3, 1 - 1e-3, 50):
            grid = AngleGrid(1, (1.0, 0.0, -1.0)) if twice == 1 else AngleGrid.from_a(spin, a)
            table = q_table(spin, grid)
            for i, tm in enumerate(spin.twice_ms()):
                for j, tl in enumerate(spin.twice_ms()):
                    for k, th in enumerate(spin.twice_ms()):
                        ref = q_closed_form(spin, a, tm / 2, tl / 2, th / 2)
                        worst = max(worst, abs(table.q[i, j, k] - ref))
    dt = time.perf_counter() - t0
    record(5, "q_table vs closed form", worst <= 1e-12, f"max |diff|={worst:.2e} over 3x50 grids", dt)


def test_criterion_06_q_properties():
    t0 = time.perf_counter()
    rng = np.random.default_rng(6)
    worst = {"positivity": 0.0, "symmetry": 0.0, "sum_rule": 0.0}
    for twice in range(1, 9):
        spin = SpinValue(twice)
        for _ in range(20):
            grid = grid_from_weights(spin, rng.random(spin.dim))
            res = q_table(spin, grid).residuals()
            worst["positivity"] = max(worst["positivity"], -res["min_q"])
            worst["symmetry"] = max(worst["symmetry"], res["swap_lh"], res["flip_lh"], res["flip_mh"])
            worst["sum_rule"] = max(worst["sum_rule"], res["sum_rule_l"], res["sum_rule_h"], res["normalization"])
    dt = time.perf_counter() - t0
    ok = all(v <= 1e-12 for v in worst.values())
    record(6, "positivity, symmetries, sum rule (s<=4)", ok,
           ", ".join(f"{k}={v:.1e}" for k, v in worst.items()), dt)


def test_criterion_07_loss_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    worst = 0.0
    for trial in range(100):
        spin = SpinValue(1 + trial % 6)
        lam = rng.dirichlet(np.ones(spin.dim))
        grid = grid_from_weights(spin, rng.random(spin.dim))
        n = direction(rng.uniform(0, math.pi), rng.uniform(0, 2 * math.pi))
        worst = max(worst, abs(device_loss_closed(spin, lam, grid) - device_loss_by_states(spin, lam, grid, n)))
    spin = SpinValue(5)
    lam = LambdaWeights(5, tuple(rng.dirichlet(np.ones(6))))
    grid = grid_from_weights(spin, rng.random(6))
    by_dir = [device_loss_by_states(spin, lam, grid, direction(t, p)) for t, p in rng.uniform(0, 3, (10, 2))]
    spread = max(by_dir) - min(by_dir)
    dt = time.perf_counter() - t0
    ok = worst <= 1e-9 and spread <= 1e-9
    record(7, "closed loss = max over states", ok, f"max |diff|={worst:.2e} (100 cases), direction spread={spread:.1e}", dt)


def test_criterion_08_cloning_relations():
    t0 = time.perf_counter()
    ex13 = cloning_device_loss_exact(CloningSpec(1, 3))
    ex22 = cloning_device_loss_exact(CloningSpec(2, 2))
    eq_ok = ex13 == ex22 == Fraction(3, 2)
    target = cloning_device_loss(CloningSpec(3, 3))
    f = lambda s: cloning_device_loss(CloningSpec(s, 2))
    s_big = 10**6
    raw = abs(f(s_big) - target)
    richardson = abs(2 * f(2 * s_big) - f(s_big) - target)
    dt = time.perf_counter() - t0
    ok = eq_ok and raw <= 1e-5 and richardson <= 1e-10
    record(8, "cloning equalities and s->inf limit", ok,
           f"Delta(1,3)=Delta(2,2)=log2({ex13}); |Delta(1e6,2)-Delta(3,3)|={raw:.2e}; extrapolated={richardson:.1e}", dt)


def test_criterion_09_ordering_suite():
    t0 = time.perf_counter()
    rep = ordering_report(11)
    numeric = [outer_search(s, 1e-8).info_loss for s in ("1/2", "1", "3/2")]
    chain_ok = 0 < numeric[0] < numeric[1] < numeric[2]
    failed = [f"{c.name}@{c.s}" for c in rep.checks if not c.passed]
    total = time.perf_counter() - t0 + sum(v for k, v in TIMINGS.items() if k != 9)
    dt = time.perf_counter() - t0
    ok = rep.passed and chain_ok and total < 60.0
    record(9, "ordering inequalities", ok,
           f"{len(rep.checks)} checks, failed={failed or 'none'}; numeric chain {'ok' if chain_ok else 'BROKEN'}; "
           f"acceptance time so far {total:.1f}s", dt)


def test_criterion_10_wigner_identities():
    t0 = time.perf_counter()
    worst = {}
    for twice in range(1, 9):
        for k, v in check_d_identities(SpinValue(twice)).items():
            worst[k] = max(worst.get(k, 0.0), v)
    dt = time.perf_counter() - t0
    record(10, "Wigner d identities (s<=4)", worst["max"] <= 1e-10,
           ", ".join(f"{k}={v:.1e}" for k, v in worst.items() if k != "max"), dt)


if __name__ == "__main__":
    failures = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                failures += 1
    sys.exit(1 if failures else 0)
