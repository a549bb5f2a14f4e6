import csv
import itertools
import math

import numpy as np
import pytest

from strutnet import save_network
from strutnet.cli import main, worker_count
from conftest import graph


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    return code, capsys.readouterr()


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


@pytest.fixture
def small_net(tmp_path, capsys):
    path = tmp_path / "net.json"
    code, _ = run(capsys, "generate", "--cylinder", 4, 3, "--radius", 1.5e-3, "--length", 6e-3,
                  "--young", 1.0, "--shear", 1.0, "--density", 2000.0, "-o", path)
    assert code == 0
    return path


def test_generate_palmaz(tmp_path, capsys):
    code, out = run(capsys, "generate", "--palmaz", "-o", tmp_path / "p.json")
    assert code == 0
    assert "vertices 144" in out.out and "struts 276" in out.out


def test_generate_cylinder_with_split(tmp_path, capsys):
    code, out = run(capsys, "generate", "--cylinder", 3, 2, "--no-end-ring", "--split", 2,
                    "-o", tmp_path / "c.json")
    assert code == 0
    assert "vertices 12" in out.out and "struts 12" in out.out


def test_static_palmaz_dimension(tmp_path, capsys):
    run(capsys, "generate", "--palmaz", "-o", tmp_path / "p.json")
    code, out = run(capsys, "static", tmp_path / "p.json", "--out", tmp_path / "o", "--format", "csv")
    assert code == 0
    assert "dimension 12462" in out.out
    rows = read_csv(tmp_path / "o" / "solution.csv")
    assert len(rows) == 276 * 5
    assert any(float(r["u2"]) != 0.0 for r in rows)


def test_static_zero_load_writes_zeros(small_net, tmp_path, capsys):
    code, _ = run(capsys, "static", small_net, "--load", "zero", "--out", tmp_path / "o")
    assert code == 0
    rows = read_csv(tmp_path / "o" / "solution.csv")
    values = [float(v) for r in rows for k, v in r.items() if k not in ("strut", "s")]
    assert not any(values)
    text = (tmp_path / "o" / "deformed.vtk").read_text()
    assert text.startswith("# vtk DataFile Version 3.0")
    assert "LINES 20 " in text


def test_static_outputs_are_byte_identical(small_net, tmp_path, capsys):
    for name in ("a", "b"):
        code, _ = run(capsys, "static", small_net, "--load", "f2", "--out", tmp_path / name,
                      "--format", "csv,vtk,triplet")
        assert code == 0
    for f in ("solution.csv", "deformed.vtk", "matrix.txt"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_singular_network_exit_code(tmp_path, capsys):
    rng = np.random.default_rng(0)
    net = graph(rng.normal(size=(5, 3)), list(itertools.combinations(range(5), 2)))
    save_network(net, tmp_path / "k5.json")
    code, out = run(capsys, "static", tmp_path / "k5.json", "--load", "constant", "--method", "dense",
                    "--out", tmp_path / "o")
    assert code == 3
    assert "kernel_dimension" in out.err


def test_missing_file_exit_code(tmp_path, capsys):
    code, out = run(capsys, "static", tmp_path / "nope.json", "--out", tmp_path / "o")
    assert code == 1


def test_converge_rates_follow_formula(small_net, tmp_path, capsys):
    code, _ = run(capsys, "converge", small_net, "--load", "f2", "--levels", 1, 2, "--reference", 4,
                  "--out", tmp_path / "o")
    assert code == 0
    rows = read_csv(tmp_path / "o" / "errors.csv")
    assert list(rows[0]) == ["level", "h", "quantity", "norm", "error", "rate"]
    first = {(r["quantity"], r["norm"]): r for r in rows if r["level"] == "0"}
    checked = 0
    for r in rows:
        if r["level"] == "1" and r["rate"] not in ("", "exact"):
            prev = first[(r["quantity"], r["norm"])]
            expected = math.log(float(r["error"]) / float(prev["error"])) / math.log(float(r["h"]) / float(prev["h"]))
            assert float(r["rate"]) == pytest.approx(expected, rel=1e-12)
            checked += 1
    assert checked > 0


def test_dynamic_reuse_on_off(small_net, tmp_path, capsys):
    outs = {}
    for flag in ("on", "off"):
        code, out = run(capsys, "dynamic", small_net, "--t-end", 1.0, "--ldlt-reuse", flag,
                        "--snapshots", 1.0, "--out", tmp_path / flag)
        assert code == 0
        outs[flag] = np.array([[float(v) for v in r.values()] for r in read_csv(tmp_path / flag / "trajectory.csv")])
    assert outs["on"].shape == outs["off"].shape
    assert np.abs(outs["on"] - outs["off"]).max() <= 1e-10 * np.abs(outs["on"][:, 2:]).max()
    assert (tmp_path / "on" / "snapshot_t1.vtk").exists()
    timings = read_csv(tmp_path / "on" / "timings.csv")
    assert [r["phase"] for r in timings] == ["assemble", "initial_state", "factorization", "time_steps"]


def test_dynamic_trajectory_is_deterministic(small_net, tmp_path, capsys):
    for name in ("a", "b"):
        run(capsys, "dynamic", small_net, "--t-end", 0.5, "--snapshots", "--out", tmp_path / name)
    assert (tmp_path / "a" / "trajectory.csv").read_bytes() == (tmp_path / "b" / "trajectory.csv").read_bytes()


def test_dynamic_canonical_check(small_net, tmp_path, capsys):
    code, out = run(capsys, "dynamic", small_net, "--t-end", 1.0, "--canonical-check", "--snapshots",
                    "--check-every", 8, "--out", tmp_path / "o")
    assert code == 0
    assert "max_rel_zhat5" in out.out


def test_analyze_dae(small_net, capsys):
    code, out = run(capsys, "analyze-dae", small_net)
    assert code == 0
    lines = dict(line.split(maxsplit=1) for line in out.out.strip().splitlines())
    assert float(lines["congruence_residual_K"]) <= 1e-10
    assert float(lines["reduced_stiffness_eig_min"]) > 0
    total = sum(int(lines[f"group{g}"]) for g in range(1, 6))
    assert total == int(lines["dimension"])


def test_worker_count_env(monkeypatch):
    monkeypatch.setenv("STRUTNET_THREADS", "2")
    assert worker_count(4) == 2
    monkeypatch.delenv("STRUTNET_THREADS")
    assert worker_count(4) == 4
