import json
import subprocess
import sys

import pytest

from pql.cli import main
from pql.harness import COLUMNS


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_simulate_table(capsys):
    code, out, _ = run(capsys, "simulate", "--learner", "rb", "--adversary", "rb-candidate", "--epsilon", "2^-12", "--delta", "2^-4", "--L", "4", "--trials", "20000", "--seed", "7")
    assert code == 0
    fields = dict(line.split(None, 1) for line in out.strip().splitlines())
    assert float(fields["mean_query_count"]) == 43
    assert abs(float(fields["privacy_hit_rate"]) - 0.25) < 0.02


def test_simulate_last_query_csv(capsys):
    code, out, _ = run(capsys, "simulate", "--learner", "bisect", "--adversary", "last-query", "--epsilon", "2^-12", "--delta", "2^-4", "--trials", "5000", "--format", "csv")
    assert code == 0
    header, row = out.strip().splitlines()
    assert header.split(",") == list(COLUMNS)
    assert dict(zip(COLUMNS, row.split(",")))["privacy_hit_rate"] == "1"


def test_simulate_json_and_channel(capsys):
    code, out, _ = run(capsys, "simulate", "--epsilon", "2^-10", "--delta", "2^-4", "--L", "2", "--channel", "erasure", "--p-obs", "0.5", "--trials", "1000", "--format", "json")
    assert code == 0
    (row,) = json.loads(out)
    assert row["channel"] == "erasure:0.5" and row["lower_bound"] is None


def test_missing_epsilon_exits_2():
    r = subprocess.run([sys.executable, "-m", "pql", "simulate", "--delta", "2^-4"], capture_output=True, text=True)
    assert r.returncode == 2 and "usage" in r.stderr


@pytest.mark.parametrize(
    "argv",
    [
        ["simulate", "--epsilon", "2^-10", "--delta", "0.3"],
        ["simulate", "--epsilon", "2^-10", "--delta", "2^-4", "--L", "3"],
        ["simulate", "--epsilon", "2^-10", "--delta", "2^-4", "--channel", "gaussian"],
        ["bounds", "--epsilon", "2", "--delta", "2^-4"],
        ["transversality", "--d", "4", "--delta", "0.25", "--random", "10"],
        ["transversality", "--d", "2", "--delta", "0.25", "--line", "1,0"],
    ],
)
def test_config_errors_exit_2(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_bounds(capsys):
    code, out, err = run(capsys, "bounds", "--epsilon", "2^-20", "--delta", "2^-4", "--L", "4", "--zeta", "0.6667")
    assert code == 0 and not err
    lines = {l.split("  ")[0].strip(): l for l in out.splitlines()}
    assert "75" in lines["upper"] and "12" in lines["lower"]
    assert "(ceil 4)" in out.splitlines()[-2]


def test_bounds_warning(capsys):
    code, _, err = run(capsys, "bounds", "--epsilon", "2^-3", "--delta", "2^-4", "--L", "1")
    assert code == 0 and "delta/4" in err


def test_bounds_json(capsys):
    code, out, _ = run(capsys, "bounds", "--epsilon", "2^-20", "--delta", "2^-4", "--L", "4", "--format", "json")
    data = json.loads(out)
    assert data["upper"] == 75 and abs(data["lower"] - 12) < 1e-9 and data["beta"] == 16


def test_transversality_line(capsys):
    code, out, _ = run(capsys, "transversality", "--d", "2", "--delta", "0.25", "--line", "1,0,0.375")
    assert code == 0
    assert out.split()[1] == "4" and "50.13" in out


def test_transversality_random(capsys):
    code, out, _ = run(capsys, "transversality", "--d", "3", "--delta", "0.25", "--random", "2000")
    assert code == 0
    fields = dict(l.rsplit(None, 1) for l in out.strip().splitlines())
    assert fields["axis-parallel N_H"] == "16" and fields["violations"] == "0"


def test_dp_demo(capsys):
    code, out, err = run(capsys, "dp-demo", "--L", "2", "--epsilon", "2^-8", "--trials", "2000")
    assert code == 0
    assert "bits 2..7 exact" in out and "final response" in err


def test_sweep_deterministic_and_resumable(tmp_path, capsys):
    cfg = tmp_path / "grid.sweep"
    cfg.write_text("epsilon = 2^-8..2^-11\ndelta = 2^-4\nL = 2\nadversary = proportional\ntrials = 5000\nseed = 3\n")
    a, b, c = tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "c.csv"
    assert main(["sweep", str(cfg), "--output", str(a)]) == 0
    assert main(["sweep", str(cfg), "--output", str(b), "--threads", "4"]) == 0
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines(keepends=True)
    c.write_text("".join(lines[:3]))
    assert main(["sweep", str(cfg), "--output", str(c), "--skip-completed"]) == 0
    assert c.read_bytes() == a.read_bytes()
    capsys.readouterr()


def test_sweep_errors(tmp_path, capsys):
    empty = tmp_path / "empty.sweep"
    empty.write_text("# nothing here\n")
    assert main(["sweep", str(empty)]) == 2
    bad = tmp_path / "bad.sweep"
    bad.write_text("epsilon = 2^-8\ndelta = 2^-4..x\n")
    assert main(["sweep", str(bad)]) == 2
    assert "line 2" in capsys.readouterr().err
    assert main(["sweep", str(tmp_path / "missing.sweep")]) == 2


def test_seed_env(monkeypatch, capsys):
    monkeypatch.setenv("PQL_SEED", "5")
    args = ["simulate", "--epsilon", "2^-10", "--delta", "2^-4", "--L", "2", "--adversary", "proportional", "--trials", "3000", "--format", "csv"]
    main(args)
    env_out = capsys.readouterr().out
    monkeypatch.delenv("PQL_SEED")
    main(args + ["--seed", "5"])
    assert capsys.readouterr().out == env_out
