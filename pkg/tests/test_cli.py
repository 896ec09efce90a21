import csv
import io
import json
import math
import subprocess
import sys

import pytest

from murspin.cli import main
from murspin.qcoeff import q_closed_form


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_qtable_spin_half(capsys):
    code, out, _ = run(capsys, "qtable", "--spin", "1/2", "--format", "json")
    assert code == 0
    data = json.loads(out)
    vals = [v for by_l in data["table"]["q"].values() for by_h in by_l.values() for v in by_h.values()]
    assert all(min(abs(v - 0.25), abs(v - 0.75)) < 1e-15 for v in vals)


def test_qtable_csv_matches_closed_form(capsys):
    code, out, err = run(capsys, "qtable", "--spin", "1", "--a", "0.5", "--format", "csv")
    assert code == 0 and "sum_rule_l" in err
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 27
    for r in rows:
        ref = q_closed_form(1, 0.5, float(r["m"]), float(r["l"]), float(r["h"]))
        assert abs(float(r["q"]) - ref) < 1e-14


def test_qtable_large_spin(capsys):
    code, out, _ = run(capsys, "qtable", "--spin", "7/2")
    assert code == 0 and "residuals" in out


def test_minloss_three_halves(capsys):
    code, out, _ = run(capsys, "minloss", "--spin", "3/2", "--format", "json")
    assert code == 0
    data = json.loads(out)
    assert abs(data["info_loss"] - 0.88615563) < 1e-8
    assert abs(data["a0"] - 0.6461537831) < 1e-9
    assert abs(data["comparison"]["info_loss"]["delta"]) < 1e-9


def test_minloss_spin_half_table(capsys):
    code, out, _ = run(capsys, "minloss", "--spin", "1/2")
    assert code == 0 and "0.41503749927" in out


def test_minloss_spin_two_unverified(capsys):
    code, out, _ = run(capsys, "minloss", "--spin", "2", "--format", "json")
    data = json.loads(out)
    assert code == 0 and data["verified"] is False and "unverified" in data["note"]


def test_minloss_nats(capsys):
    _, out, _ = run(capsys, "minloss", "--spin", "1/2", "--format", "json", "--nats")
    data = json.loads(out)
    assert data["unit"] == "nats"
    assert abs(data["info_loss"] - math.log(4 / 3)) < 1e-12


def test_json_is_deterministic(capsys):
    outs = [run(capsys, "minloss", "--spin", "1", "--format", "json", "--seed", "4")[1] for _ in range(2)]
    assert outs[0] == outs[1]


def test_loss_and_decomposition(capsys):
    code, out, _ = run(capsys, "loss", "--spin", "1", "--lambdas", "0.5,0.3,0.2", "--direction", "0.3,1", "--format", "json")
    assert code == 0
    row = json.loads(out)["rows"][0]
    assert abs(row["delta"]) < 1e-9
    code, out, _ = run(capsys, "decomposition", "--spin", "3/2", "--a", "0.6", "--format", "json")
    assert code == 0
    assert json.loads(out)["reconstruction_error"] < 1e-12


def test_cloning(capsys):
    code, out, _ = run(capsys, "cloning", "--spin", "1", "--r", "3", "--format", "csv")
    assert code == 0
    row = next(csv.DictReader(io.StringIO(out)))
    assert abs(float(row["device_loss"]) - math.log2(1.5)) < 1e-15


def test_bias(capsys):
    code, out, _ = run(capsys, "bias", "--spin", "3/2", "--optimal", "--format", "json")
    assert code == 0
    assert abs(json.loads(out)["rows"][0]["bias"] - 0.0644280655) < 1e-9


def test_ordering_writes_data_files(capsys, tmp_path):
    code, out, _ = run(capsys, "ordering", "--max-spin", "3", "--data-dir", str(tmp_path), "--format", "json")
    assert code == 0
    data = json.loads(out)
    eq = [c for c in data["checks"] if c["name"] == "cloning.eq"][0]
    assert eq["passed"] and abs(eq["lhs"] - math.log2(1.5)) < 1e-15
    files = sorted(p.name for p in tmp_path.iterdir())
    assert "I_A2.csv" in files and "checks.csv" in files
    lines = (tmp_path / "Delta_cl3.csv").read_text().splitlines()
    assert lines[0] == "s,Delta_cl3" and len(lines) == 7


def test_ordering_to_eleven(capsys):
    code, out, _ = run(capsys, "ordering", "--max-spin", "11")
    assert code == 0 and "all checks passed" in out


def test_output_file(capsys, tmp_path):
    target = tmp_path / "q.csv"
    code, out, _ = run(capsys, "qtable", "--spin", "1/2", "--format", "csv", "--output", str(target))
    assert code == 0 and out == ""
    assert target.read_text().startswith("m,l,h,q")


@pytest.mark.parametrize(
    "argv",
    [
        ["qtable", "--spin", "1/3"],
        ["qtable"],
        ["qtable", "--spin", "1", "--a", "1.5"],
        ["minloss", "--spin", "1", "--tol", "0"],
        ["nosuch"],
        ["qtable", "--spin", "1", "--format", "xml"],
        ["bias", "--spin", "2", "--optimal"],
        ["cloning", "--spin", "1", "--r", "4"],
    ],
)
def test_usage_errors_exit_2(capsys, argv):
    assert main(argv) == 2


def test_threads_env_fallback(capsys, monkeypatch):
    monkeypatch.setenv("MURSPIN_THREADS", "2")
    code, out, _ = run(capsys, "minloss", "--spin", "1", "--format", "json")
    assert code == 0


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "murspin", "cloning", "--spin", "1/2"], capture_output=True, text=True)
    assert proc.returncode == 0 and "upper-bound" in proc.stdout
