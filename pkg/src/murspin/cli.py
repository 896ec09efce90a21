"""Command-line front end: tables, loss reports and x-y data files.

Exit codes: 0 success, 1 invariant or agreement failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .infoloss import (
    bias_from_cells,
    device_loss_by_states,
    device_loss_closed,
    mixed_state_bias,
    noisy_decomposition,
)
from .minimize import (
    BoundViolation,
    analytic_solution,
    bias_closed_three_halves,
    bound_check,
    outer_search,
)
from .orthogonal import (
    CloningSpec,
    cloning_device_loss,
    cloning_device_loss_by_states,
    cloning_marginals,
    ordering_report,
)
from .qcoeff import AngleGrid, LambdaWeights, parse_fraction_list, q_table, unbiased_grid
from .spin import SpinValue, direction, format_half

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
RESIDUAL_TOL = 1e-10
AGREE_TOL = 1e-5
NATS_PER_BIT = math.log(2)


class UsageError(ValueError):
    pass


@dataclass(frozen=True)
class CliConfig:
    spin: SpinValue
    tolerance: float = 1e-8
    output_format: str = "table"
    seed: int = 0
    output_path: Optional[Path] = None
    threads: Optional[int] = None
    nats: bool = False

    def __post_init__(self):
        if not self.tolerance > 0:
            raise UsageError("tolerance must be positive")

    def loss(self, bits: float) -> float:
        return bits * NATS_PER_BIT if self.nats else bits

    @property
    def unit(self) -> str:
        return "nats" if self.nats else "bits"


# ------------------------------------------------------------------ output


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _records_csv(records: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    keys = list(records[0]) if records else []
    w.writerow(keys)
    for rec in records:
        w.writerow([_fmt(rec[k]) for k in keys])
    return buf.getvalue()


def _records_table(records: list[dict]) -> str:
    if not records:
        return ""
    keys = list(records[0])
    cells = [[_fmt(r[k]) for k in keys] for r in records]
    widths = [max(len(k), *(len(c[i]) for c in cells)) for i, k in enumerate(keys)]
    lines = ["  ".join(k.ljust(w) for k, w in zip(keys, widths)).rstrip()]
    lines += ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in cells]
    return "\n".join(lines)


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)


def _emit(cfg: CliConfig, text: str) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if cfg.output_path is not None:
        cfg.output_path.parent.mkdir(parents=True, exist_ok=True)
        cfg.output_path.write_text(text)
    else:
        sys.stdout.write(text)


def _render(cfg: CliConfig, records: list[dict], extra: Optional[dict] = None) -> str:
    if cfg.output_format == "json":
        payload = {"s": str(cfg.spin), "unit": cfg.unit, "rows": records}
        if extra:
            payload.update(extra)
        return _dump_json(payload)
    if cfg.output_format == "csv":
        return _records_csv(records)
    return _records_table(records)


# ------------------------------------------------------------ arg helpers


def _grid(spin: SpinValue, args) -> AngleGrid:
    chosen = [x for x in (args.a, args.cosines, args.free) if x is not None]
    if len(chosen) > 1:
        raise UsageError("give at most one of --a, --cosines, --free")
    if args.a is not None:
        return AngleGrid.from_a(spin, float(args.a))
    if args.cosines is not None:
        return AngleGrid(spin.twice_s, tuple(parse_fraction_list(args.cosines)))
    if args.free is not None:
        return AngleGrid.from_free(spin, parse_fraction_list(args.free))
    return unbiased_grid(spin)


def _lambdas(spin: SpinValue, args) -> LambdaWeights:
    if args.lambdas is None:
        return LambdaWeights.delta(spin, spin.s)
    return LambdaWeights(spin.twice_s, tuple(parse_fraction_list(args.lambdas)))


def _direction(args) -> np.ndarray:
    if args.direction is None:
        return np.array([0.0, 0.0, 1.0])
    theta, phi = parse_fraction_list(args.direction)
    return direction(theta, phi)


def _config(args) -> CliConfig:
    spin = SpinValue.of(args.spin) if getattr(args, "spin", None) is not None else SpinValue(1)
    return CliConfig(
        spin=spin,
        tolerance=args.tol,
        output_format=args.format,
        seed=args.seed,
        output_path=Path(args.output) if args.output else None,
        threads=args.threads,
        nats=args.nats,
    )


# --------------------------------------------------------------- commands


def cmd_qtable(cfg: CliConfig, args) -> int:
    spin = cfg.spin
    table = q_table(spin, _grid(spin, args))
    res = table.residuals()
    bad = {k: v for k, v in res.items() if (k == "min_q" and v < -RESIDUAL_TOL) or (k != "min_q" and v > RESIDUAL_TOL)}
    extra_rows = None
    if args.lambdas is not None:
        trans = table.mixture(_lambdas(spin, args))
        labels = [format_half(t) for t in spin.twice_ms()]
        extra_rows = [{"m": labels[i], "h": labels[j], "p": float(trans[i, j])}
                      for i in range(spin.dim) for j in range(spin.dim)]
    if cfg.output_format == "json":
        payload = {"table": table.to_dict(), "residuals": res}
        if extra_rows is not None:
            payload["mixture"] = extra_rows
        text = _dump_json(payload)
    elif cfg.output_format == "csv":
        text = table.to_csv()
        sys.stderr.write(_records_csv([res]))
    else:
        text = _records_table([{"m": m, "l": l, "h": h, "q": v} for m, l, h, v in table.rows()])
        text += "\n\ncosines: " + ", ".join(f"{c:.17g}" for c in table.grid.cosines)
        text += "\nresiduals:\n" + "\n".join(f"  {k:<14} {v:.3e}" for k, v in res.items())
        if extra_rows is not None:
            text += "\n\nmixture T[m,h]:\n" + _records_table(extra_rows)
    _emit(cfg, text)
    if bad:
        sys.stderr.write(f"invariant violation: {bad}\n")
        return EXIT_FAIL
    return EXIT_OK


def cmd_minloss(cfg: CliConfig, args) -> int:
    spin = cfg.spin
    report = outer_search(spin, cfg.tolerance, seed=cfg.seed, threads=cfg.threads)
    status = EXIT_OK
    try:
        report = bound_check(report)
    except BoundViolation as exc:
        sys.stderr.write(f"{exc}\n")
        report = bound_check(report, strict=False)
        status = EXIT_FAIL
    comparison = None
    if spin.twice_s <= 3:
        ref = analytic_solution(spin)
        comparison = {
            "info_loss": (ref.info_loss, report.info_loss),
            "k_value": (ref.k_value, report.k_value),
        }
        if ref.a0 is not None:
            comparison["a0"] = (ref.a0, report.a0)
        if any(abs(a - n) > AGREE_TOL for a, n in comparison.values()):
            status = EXIT_FAIL
    if not report.converged:
        status = EXIT_FAIL

    if cfg.output_format == "json":
        payload = report.to_dict(trace=True)
        payload["unit"] = cfg.unit
        payload["info_loss"] = cfg.loss(report.info_loss)
        if comparison:
            payload["comparison"] = {
                k: {"analytic": a, "numeric": n, "delta": n - a} for k, (a, n) in comparison.items()
            }
        text = _dump_json(payload)
    else:
        records = []
        if comparison:
            for k, (a, n) in comparison.items():
                scale = cfg.loss if k == "info_loss" else (lambda v: v)
                records.append({"quantity": k, "analytic": scale(a), "numeric": scale(n), "delta": scale(n) - scale(a)})
        else:
            records.append({"quantity": "info_loss", "analytic": "", "numeric": cfg.loss(report.info_loss), "delta": ""})
            records.append({"quantity": "k_value", "analytic": "", "numeric": report.k_value, "delta": ""})
        if cfg.output_format == "csv":
            text = _records_csv(records)
        else:
            text = report.to_table() + f"\nunit        {cfg.unit}\n\n" + _records_table(records)
    _emit(cfg, text)
    return status


def cmd_loss(cfg: CliConfig, args) -> int:
    spin = cfg.spin
    grid = _grid(spin, args)
    lam = _lambdas(spin, args)
    n = _direction(args)
    closed = device_loss_closed(spin, lam, grid)
    by_states = device_loss_by_states(spin, lam, grid, n)
    rec = {
        "s": str(spin),
        "visibility": 2.0 ** (-closed),
        "device_loss": cfg.loss(closed),
        "device_loss_by_states": cfg.loss(by_states),
        "delta": cfg.loss(by_states - closed),
    }
    _emit(cfg, _render(cfg, [rec], {"cosines": list(grid.cosines), "lambdas": list(lam.weights)}))
    return EXIT_OK if abs(by_states - closed) <= 1e-9 else EXIT_FAIL


def cmd_decomposition(cfg: CliConfig, args) -> int:
    spin = cfg.spin
    dec = noisy_decomposition(spin, _lambdas(spin, args), _grid(spin, args), _direction(args))
    labels = [format_half(t) for t in spin.twice_ms()]
    records = []
    ok = dec.reconstruction_error() <= 1e-10
    for i, m in enumerate(labels):
        w = np.linalg.eigvalsh(dec.noise_elements[i])
        ok = ok and w.min() >= -1e-10
        records.append({"m": m, "noise_trace": float(np.trace(dec.noise_elements[i]).real),
                        "noise_min_eig": float(w.min()), "noise_max_eig": float(w.max())})
    total = dec.noise_elements.sum(axis=0)
    ok = ok and np.abs(total - np.eye(spin.dim)).max() <= 1e-10
    extra = {"visibility": dec.visibility, "reconstruction_error": dec.reconstruction_error()}
    text = _render(cfg, records, extra)
    if cfg.output_format == "table":
        text = f"visibility            {dec.visibility:.17g}\nreconstruction error  {dec.reconstruction_error():.3e}\n\n" + text
    _emit(cfg, text)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_cloning(cfg: CliConfig, args) -> int:
    spin = cfg.spin
    records = []
    ok = True
    for r in ([args.r] if args.r else [2, 3]):
        spec = CloningSpec(spin, r)
        closed = cloning_device_loss(spec)
        oracle = cloning_device_loss_by_states(spec)
        for ax in spec.axes():
            elems = cloning_marginals(spec, ax)
            ok = ok and np.abs(elems.sum(axis=0) - np.eye(spin.dim)).max() <= 1e-10
            ok = ok and min(np.linalg.eigvalsh(e).min() for e in elems) >= -1e-10
        ok = ok and abs(closed - oracle) <= 1e-10
        records.append({
            "s": str(spin), "r": r, "weight": float(spec.weight()), "visibility": float(spec.visibility()),
            "device_loss": cfg.loss(closed), "device_loss_by_states": cfg.loss(oracle), "kind": "upper-bound",
        })
    _emit(cfg, _render(cfg, records))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_ordering(cfg: CliConfig, args) -> int:
    rep = ordering_report(args.max_spin, numeric_max=args.numeric_max, tol=cfg.tolerance,
                          seed=cfg.seed, threads=cfg.threads)
    if cfg.output_format == "json":
        text = rep.to_json()
    elif cfg.output_format == "csv":
        text = rep.to_csv()
    else:
        text = rep.to_table() + f"\n\n{'all checks passed' if rep.passed else 'SOME CHECKS FAILED'}"
    _emit(cfg, text)
    if args.data_dir:
        out = Path(args.data_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name, pts in rep.series().items():
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(["s", name])
            for s, v in pts:
                w.writerow([f"{s:.17g}", f"{v:.17g}"])
            (out / f"{name}.csv").write_text(buf.getvalue())
        (out / "checks.csv").write_text(rep.checks_csv())
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_bias(cfg: CliConfig, args) -> int:
    spin = cfg.spin
    if args.optimal:
        if spin.twice_s > 3:
            raise UsageError("--optimal needs s <= 3/2")
        grid = analytic_solution(spin).grid_opt
    else:
        grid = _grid(spin, args)
    lam = _lambdas(spin, args)
    bias = mixed_state_bias(spin, lam, grid)
    cells = bias_from_cells(grid)
    rec = {"s": str(spin), "bias": cfg.loss(bias), "bias_from_cells": cfg.loss(cells)}
    ok = abs(bias - cells) <= 1e-10
    if spin.twice_s == 3:
        closed = bias_closed_three_halves(grid.cosines[1])
        rec["bias_closed_form"] = cfg.loss(closed)
        ok = ok and abs(closed - bias) <= 1e-10
    _emit(cfg, _render(cfg, [rec], {"cosines": list(grid.cosines)}))
    return EXIT_OK if ok else EXIT_FAIL


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--spin", default=None, help="spin s, e.g. 3/2 or 1.5")
    common.add_argument("--tol", type=float, default=1e-8)
    common.add_argument("--format", choices=("table", "csv", "json"), default="table")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--output", default=None, help="write to this file instead of stdout")
    common.add_argument("--threads", type=int, default=None, help="worker threads (default: MURSPIN_THREADS or 1)")
    common.add_argument("--nats", action="store_true", help="display losses in nats")

    geometry = argparse.ArgumentParser(add_help=False)
    geometry.add_argument("--a", default=None, help="cos(theta_1) for s = 1 or 3/2")
    geometry.add_argument("--cosines", default=None, help="full grid, comma separated, 1 ... -1")
    geometry.add_argument("--free", default=None, help="the floor(s) free cosines above the midpoint")
    geometry.add_argument("--lambdas", default=None, help="weights in l = s..-s order")
    geometry.add_argument("--direction", default=None, help="theta,phi of the target direction")

    p = argparse.ArgumentParser(prog="murspin", description="Entropic measurement uncertainty for spin components.")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("qtable", parents=[common, geometry], help="q-coefficient table and residuals")
    sp.set_defaults(func=cmd_qtable, needs_spin=True)
    sp = sub.add_parser("minloss", parents=[common], help="minimum information loss")
    sp.set_defaults(func=cmd_minloss, needs_spin=True)
    sp = sub.add_parser("loss", parents=[common, geometry], help="device loss at given weights and grid")
    sp.set_defaults(func=cmd_loss, needs_spin=True)
    sp = sub.add_parser("decomposition", parents=[common, geometry], help="visibility and noise elements")
    sp.set_defaults(func=cmd_decomposition, needs_spin=True)
    sp = sub.add_parser("cloning", parents=[common], help="cloning-based losses for 2 or 3 components")
    sp.add_argument("--r", type=int, choices=(2, 3), default=None)
    sp.set_defaults(func=cmd_cloning, needs_spin=True)
    sp = sub.add_parser("ordering", parents=[common], help="ordering table with inequality checks")
    sp.add_argument("--max-spin", required=True)
    sp.add_argument("--numeric-max", default=None, help="largest s with a numeric all-component loss")
    sp.add_argument("--data-dir", default=None, help="directory for s vs loss CSV files")
    sp.set_defaults(func=cmd_ordering, needs_spin=False)
    sp = sub.add_parser("bias", parents=[common, geometry], help="bias on the maximally mixed state")
    sp.add_argument("--optimal", action="store_true", help="use the optimal grid (s <= 3/2)")
    sp.set_defaults(func=cmd_bias, needs_spin=True)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    try:
        if args.needs_spin and args.spin is None:
            raise UsageError("--spin is required")
        cfg = _config(args)
        return args.func(cfg, args)
    except (UsageError, ValueError) as exc:
        sys.stderr.write(f"murspin: error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
