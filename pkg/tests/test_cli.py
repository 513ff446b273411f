import hashlib
import json
import os
import subprocess
import sys

import pytest

from glimm_escape import cli, io

SMALL = ["--set", "grid.n_cells=40", "--set", "time.max_steps=30", "--set", "output.snapshot_every=10"]


def tree_hash(root):
    h = hashlib.sha256()
    for dirpath, _, files in sorted(os.walk(root)):
        for name in sorted(files):
            path = os.path.join(dirpath, name)
            h.update(os.path.relpath(path, root).encode())
            with open(path, "rb") as fh:
                h.update(fh.read())
    return h.hexdigest()


def test_run_writes_outputs(tmp_path):
    out = tmp_path / "run"
    assert cli.main(["run", "--preset", "escape-compliant", "--out", str(out), *SMALL]) == cli.EXIT_OK
    names = set(os.listdir(out))
    assert {"config.txt", "boundary.csv", "summary.json"} <= names
    assert any(n.startswith("snap_") for n in names)
    for path in io.list_snapshots(out):
        io.read_snapshot(path)
    reports = [os.path.join(out, n) for n in names if n.endswith(".jsonl")]
    for path in reports:
        assert all(io.validate_report(r) for r in io.read_reports(path))
    summary = io.read_json(out / "summary.json")
    assert summary["min_u_cells"] > 0.0


def test_same_seed_same_tree(tmp_path):
    args = ["run", "--preset", "heated-escape", *SMALL, "--set", "theta.kind=seeded_uniform", "--seed", "11"]
    assert cli.main([*args, "--out", str(tmp_path / "a")]) == 0
    assert cli.main([*args, "--out", str(tmp_path / "b")]) == 0
    assert tree_hash(tmp_path / "a") == tree_hash(tmp_path / "b")
    args[-1] = "12"
    assert cli.main([*args, "--out", str(tmp_path / "c")]) == 0
    assert tree_hash(tmp_path / "a") != tree_hash(tmp_path / "c")


def test_config_file_and_region(tmp_path):
    cfg = tmp_path / "c.txt"
    cfg.write_text("preset = escape-compliant\ngrid.n_cells = 40\ntime.max_steps = 30\noutput.snapshot_every = 10\n")
    out = tmp_path / "run"
    assert cli.main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    assert cli.main(["region", "--snapshots", str(out), "--out", str(tmp_path / "region.json")]) == 0
    rep = io.read_json(tmp_path / "region.json")
    assert "x_star_star" in rep and "dominance" in rep


def test_malformed_config_exits_1(tmp_path, capsys):
    assert cli.main(["run", "--preset", "escape-compliant", "--set", "grid.bogus=1", "--out", str(tmp_path)]) == 1
    assert "config error" in capsys.readouterr().err
    assert cli.main(["run", "--config", str(tmp_path / "missing.txt"), "--out", str(tmp_path)]) == 1


def test_strict_warning_exits_2(tmp_path):
    args = ["run", "--preset", "sod-geometric", "--out", str(tmp_path / "o"), *SMALL]
    assert cli.main([*args, "--strict"]) == cli.EXIT_STRICT
    assert not (tmp_path / "o").exists()


def test_positivity_violation_exits_3(tmp_path):
    code = cli.main(["run", "--preset", "sod-geometric", "--set", "scheme.rho_floor=10", "--out", str(tmp_path), *SMALL])
    assert code == cli.EXIT_POSITIVITY


def test_solver_failure_exits_4(tmp_path):
    code = cli.main(["run", "--preset", "sod-geometric", "--set", "initial.u=-30", "--set", "initial.u_r=30",
                     "--out", str(tmp_path), *SMALL])
    assert code == cli.EXIT_SOLVER


def test_converge_and_compare_tables(tmp_path, capsys):
    small = ["--set", "grid.n_cells=20", "--set", "time.t_final=0.02"]
    assert cli.main(["converge", "--preset", "heated-escape", "--levels", "2", *small,
                     "--out", str(tmp_path / "c.json")]) == 0
    rows = io.read_json(tmp_path / "c.json")
    assert [r["n_cells"] for r in rows] == [20, 40] and "l1_to_previous" in rows[1]
    capsys.readouterr()
    assert cli.main(["compare", "--preset", "heated-escape", "--levels", "2", *small]) == 0
    lines = [json.loads(s) for s in capsys.readouterr().out.splitlines() if s.startswith("{")]
    assert len(lines) == 2 and all("relative_l1" in r for r in lines)


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "glimm_escape", "run", "--preset", "uniform-supersonic",
                          "--out", str(tmp_path / "o"), *SMALL], capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    res = subprocess.run([sys.executable, "-m", "glimm_escape", "bogus"], capture_output=True, text=True)
    assert res.returncode == 2  # argparse usage error


@pytest.mark.parametrize("name", ["uniform-supersonic", "sod-geometric", "escape-compliant", "heated-escape"])
def test_every_preset_runs(tmp_path, name):
    assert cli.main(["run", "--preset", name, "--out", str(tmp_path), *SMALL]) == 0
